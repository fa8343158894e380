"""Sentiment analysis toolkit for app-store reviews."""

from .corpus import DatasetSplit, ReviewRecord, load_reviews, preprocess, split
from .encoder import EncoderConfig, forward, init_params, load_params, loss_and_grad, save_params
from .evaluation import ConfusionMatrix, RunReport, accuracy, confusion, render_report
from .labeling import Lexicon, Sentiment, label_by_lexicon, label_by_score, load_lexicon
from .tokenizer import Vocab, encode, load_vocab, wordpiece_tokenize
from .trainer import TrainConfig, fine_tune, grid_search

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "DatasetSplit",
    "EncoderConfig",
    "Lexicon",
    "ReviewRecord",
    "RunReport",
    "Sentiment",
    "TrainConfig",
    "Vocab",
    "accuracy",
    "confusion",
    "encode",
    "fine_tune",
    "forward",
    "grid_search",
    "init_params",
    "label_by_lexicon",
    "label_by_score",
    "load_lexicon",
    "load_params",
    "load_reviews",
    "load_vocab",
    "loss_and_grad",
    "preprocess",
    "render_report",
    "save_params",
    "split",
    "wordpiece_tokenize",
]
