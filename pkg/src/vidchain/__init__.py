"""vidchain: hybrid VAE-GAN video generation with frame-difference motion,
overlap-trained clip chaining, and fixed-memory long-video assembly."""

from .autodiff import Tensor, GradTape, backward, NumericsError, GradientError
from .gaussian import GaussianParams, gaussian_kl, reparameterize
from .optim import AdamState, adam_step
from .rng import RandomStream

__version__ = "0.1.0"
