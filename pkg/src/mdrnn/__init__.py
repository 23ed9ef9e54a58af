"""Multi-dimensional recurrent networks with exact hand-derived gradients.

Public surface:
    grid        n-dimensional sequences, scan order, reflections
    tanh_layer  vanilla recurrent layer (per-axis recurrency, tanh units)
    lstm_layer  LSTM layer with per-axis cell self-connections and forget gates
    network     multi-directional composition, softmax output, checkpoints
    train       online gradient descent with momentum, model selection
    data        IDX files, pixel targets, elastic deformation, splits
    metrics     pixel/image error rates and evaluation reports
    analysis    input-sensitivity maps and activation dumps
    gradcheck   finite-difference verification harness
"""

__version__ = "0.1.0"
