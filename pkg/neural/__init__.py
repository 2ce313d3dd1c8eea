"""
역투영 신경망 패키지 (역전파 테이프, 네트워크, Adam, 가중치 파일)
"""
from .network import (
    NetArch, NetWeights, Gradients, GeomFeatures, PaddedBatch,
    init_weights, zero_weights, encode_position, encode_appearance, attention_block,
    forward, backward, forward_batch, loss_and_grads, batch_from_gather, batch_from_sets,
    predict_gather,
)
from .optim import Adam
from .weights_io import save_weights, load_weights

__all__ = [
    'NetArch', 'NetWeights', 'Gradients', 'GeomFeatures', 'PaddedBatch',
    'init_weights', 'zero_weights', 'encode_position', 'encode_appearance', 'attention_block',
    'forward', 'backward', 'forward_batch', 'loss_and_grads', 'batch_from_gather',
    'batch_from_sets', 'predict_gather',
    'Adam', 'save_weights', 'load_weights',
]
