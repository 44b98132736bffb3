from .tensor import Tensor, UsageError, no_grad, conv2d, relu, global_avg_pool
from .layers import ConvLayer, Dense, ResidualBlock, conv_forward, dense_forward, residual_forward
from .network import EmbedNet, EmbedNetConfig, Siamese, EMBED_DIMS, embed, embed_batch, patch_batch
from .losses import triplet_loss, contrastive_loss, batch_triplet_loss, batch_contrastive_loss
from .optim import Adam
from .training import TrainConfig, TrainResult, CorpusError, train_siamese, fit_triplets
from .clustering import DegenerateClusterError, davies_bouldin
from .serialization import ModelFormatError, save_embednet, load_embednet, write_loss_history
