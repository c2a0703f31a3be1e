"""Neural network core: LSTM cells, the linear-chain CRF, the assembled
tagging model, and checkpoint I/O."""
from .crf import (
    crf_backward,
    crf_nll,
    log_sum_exp,
    path_score,
    softmax_backward,
    softmax_decode,
    softmax_nll,
    viterbi_decode,
)
from .checkpoint import load_model, save_model
from .lstm import lstm_backward, lstm_forward
from .model import (
    Gradients,
    ModelParams,
    NetCache,
    NetConfig,
    RowGrads,
    backward,
    char_encode,
    decode,
    forward,
    global_grad_norm,
    init_params,
    sentence_gradients,
    sentence_loss,
    sgd_step,
    tensor_shapes,
)

__all__ = [
    "Gradients", "ModelParams", "NetCache", "NetConfig", "RowGrads",
    "backward", "char_encode", "crf_backward", "crf_nll", "decode",
    "forward", "global_grad_norm", "init_params", "load_model",
    "log_sum_exp", "lstm_backward", "lstm_forward", "path_score",
    "save_model", "sentence_gradients", "sentence_loss", "sgd_step",
    "softmax_backward", "softmax_decode", "softmax_nll", "tensor_shapes",
    "viterbi_decode",
]
