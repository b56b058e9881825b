"""Phishing web-page detection from raw URL and HTML characters."""

from .corpus import DatasetSplit, Label, WebPageSample, load_manifest, normalize_url, split
from .model import ModelConfig, ModelParams, forward, predict
from .tokenizer import CharVocabulary, EncoderConfig, build_vocab, encode
from .train import TrainConfig, fine_tune, train

__version__ = "0.1.0"

__all__ = [
    "CharVocabulary",
    "DatasetSplit",
    "EncoderConfig",
    "Label",
    "ModelConfig",
    "ModelParams",
    "TrainConfig",
    "WebPageSample",
    "build_vocab",
    "encode",
    "fine_tune",
    "forward",
    "load_manifest",
    "normalize_url",
    "predict",
    "split",
    "train",
    "__version__",
]
