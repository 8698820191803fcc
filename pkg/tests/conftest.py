"""Shared fixtures: a tiny model shape and a small trained model that the
threshold, CLI, and determinism tests reuse."""

from __future__ import annotations

import numpy as np
import pytest

from ponziscan import datasynth
from ponziscan.encoding import Vocabulary, build_vocab
from ponziscan.model.config import ModelConfig
from ponziscan.pipeline import finetune


@pytest.fixture(scope="session")
def tiny_config() -> ModelConfig:
    return ModelConfig(n_layers=1, d_h=8, n_heads=2, d_ff=16,
                       code_len=8, flow_len=2, seed=0)


@pytest.fixture(scope="session")
def small_corpus():
    return datasynth.generate_corpus(16, 8, seed=11)


@pytest.fixture(scope="session")
def small_vocab(small_corpus) -> Vocabulary:
    return build_vocab(small_corpus, 512)


@pytest.fixture(scope="session")
def run_config() -> ModelConfig:
    """Big enough to separate the synthetic classes, small enough to train
    in seconds."""
    return ModelConfig(n_layers=1, d_h=32, n_heads=2, d_ff=64,
                       code_len=64, flow_len=16, seed=0)


@pytest.fixture(scope="session")
def trained_model(small_corpus, small_vocab, run_config):
    """(params, vocab, config) fine-tuned to separate the synthetic corpus."""
    result = finetune(small_corpus, small_vocab, run_config, epochs=8,
                      lr=1e-3, seed=1)
    return result.params, small_vocab, run_config
