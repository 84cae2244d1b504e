"""Minimal numpy training engine: layers, losses, Adam and gradient checks."""

from .functional import GruCell, LstmCell, gru_cell_step, lstm_cell_step, relu, sigmoid, softmax, tanh
from .layers import (GRU, LSTM, BatchNorm, Conv1D, Dense, Dropout, Flatten, MaxPool1D, Param, ReLU,
                     Softmax)
from .losses import cross_entropy, one_hot, penalty
from .network import LayerSpec, Sequential
from .optim import Adam

__all__ = [
    "GruCell", "LstmCell", "gru_cell_step", "lstm_cell_step", "relu", "sigmoid", "softmax", "tanh",
    "GRU", "LSTM", "BatchNorm", "Conv1D", "Dense", "Dropout", "Flatten", "MaxPool1D", "Param",
    "ReLU", "Softmax", "cross_entropy", "one_hot", "penalty", "LayerSpec", "Sequential", "Adam",
]
