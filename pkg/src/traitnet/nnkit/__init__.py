from .module import (
    Dropout,
    Linear,
    Module,
    Param,
    ReLU,
    Sigmoid,
    fully_connected_forward,
    init_uniform,
    logistic,
    sigmoid_head,
)
from .conv import Conv2d, ConvBlock, GlobalAvgPool, MaxPool2d
from .lstm import GATE_NAMES, LstmCellParams, LstmLayer, LstmStack, LstmStackConfig, lstm_cell_step, lstm_stack_forward
from .optim import Adam, AdamConfig, adam_update
from .gradcheck import GradCheckReport, check_module_gradients, finite_difference_check, relative_error
from .checkpoint import container_hash, file_hash, load_container, save_container

__all__ = [
    "Adam", "AdamConfig", "GATE_NAMES", "Conv2d", "ConvBlock", "Dropout", "GlobalAvgPool",
    "GradCheckReport", "Linear", "LstmCellParams", "LstmLayer", "LstmStack",
    "LstmStackConfig", "MaxPool2d", "Module", "Param", "ReLU", "Sigmoid",
    "adam_update", "check_module_gradients", "container_hash", "file_hash",
    "finite_difference_check", "fully_connected_forward", "init_uniform",
    "load_container", "logistic", "lstm_cell_step", "lstm_stack_forward",
    "relative_error", "save_container", "sigmoid_head",
]
