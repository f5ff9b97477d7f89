from .embeddings import EmbeddingTable, sentence_hash
from .network import (
    EncodedDoc,
    ModelConfig,
    Segmenter,
    decide,
    document_logits,
    document_probabilities,
    encode_document,
    encode_sentence,
    encode_sentences,
    forward_batch,
    full_scale_config,
    init_params,
    param_shapes,
    predict,
    predict_proba,
)
from .schedule import ONLINE_PRESETS, MaskSchedule, mask_for_layer, receptive_field
from .streaming import END, Decision, StreamSession, stream_step
from .vocab import Vocabulary, word_tokens

__all__ = [
    "END",
    "Decision",
    "EmbeddingTable",
    "EncodedDoc",
    "MaskSchedule",
    "ModelConfig",
    "ONLINE_PRESETS",
    "Segmenter",
    "StreamSession",
    "Vocabulary",
    "decide",
    "document_logits",
    "document_probabilities",
    "encode_document",
    "encode_sentence",
    "encode_sentences",
    "forward_batch",
    "full_scale_config",
    "init_params",
    "mask_for_layer",
    "param_shapes",
    "predict",
    "predict_proba",
    "receptive_field",
    "sentence_hash",
    "stream_step",
    "word_tokens",
]
