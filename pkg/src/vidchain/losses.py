"""Training objectives for the short-clip model.

Conventions shared by every loss here and in the chaining module:

* A clip batch is a Tensor (B, T, D).  Reconstruction error is the per-frame
  *sum* of squared pixel differences; sums over frames are normalized by the
  frame count and everything is averaged over the batch, so magnitudes are
  independent of batch size and clip length (but scale with frame area,
  keeping the pixel term strong relative to the KL terms).
* The frame-reconstruction objective counts frame 0 twice: once as the
  dedicated first-frame term and once inside the per-frame average.
* Reconstruction compares the generator's *pre-clamp* output, so its
  gradient never dies when pixels saturate; discriminators always see the
  clamped clip, which is what generation emits.
* Adversarial terms use the non-saturating form -log D(fake) for the
  generator and -[log D(real) + log(1 - D(fake))] for discriminators.  With
  logits clamped to +-15 all log terms are finite.
* Image discriminators score one random frame per clip per loss evaluation;
  the same index is shared by every image term inside that evaluation.
* Every loss takes an explicit RandomStream and derives named children, so
  a (parameters, batch, stream) triple fixes the value bit-for-bit.

Losses never detach: each is differentiable w.r.t. every parameter it
touches, and the training step decides which group's gradients to apply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .gaussian import gaussian_kl, reparameterize
from .model import ModelBundle, clips_to_tensor
from .rng import RandomStream

__all__ = [
    "LossOutput", "frame_recon", "diff_recon", "ref_frame_recon",
    "gather_frames", "pixel_mse",
    "loss_enc", "loss_enc_v", "loss_gen", "loss_d_image", "loss_d_video",
]


@dataclass
class LossOutput:
    total: Tensor            # scalar, ready for backward()
    parts: dict              # named float diagnostics, including "total"

    def item(self) -> float:
        return self.total.item()


def _as_clip_tensor(clips) -> Tensor:
    if isinstance(clips, Tensor):
        t = clips
    else:
        arr = np.asarray(clips)
        if arr.size == 0:
            raise ValueError("empty batch")
        t = clips_to_tensor(arr)
    if t.ndim != 3:
        raise ValueError(f"expected a (batch, frames, pixels) tensor, got {t.shape}")
    if t.shape[0] == 0:
        raise ValueError("empty batch")
    return t


# -- reconstruction objectives (pure, hand-checkable) ---------------------------

def frame_recon(x: Tensor, x_hat: Tensor) -> Tensor:
    """mean over batch of  ||x_0 - x̂_0||^2  +  (1/T) Σ_j ||x_j - x̂_j||^2."""
    per_frame = ad.sum(ad.square(x - x_hat), axis=2)        # (B, T)
    return ad.mean(per_frame[:, 0] + ad.mean(per_frame, axis=1))


def diff_recon(x: Tensor, x_hat: Tensor) -> Tensor:
    """mean over batch of  ||x_0 - x̂_0||^2  +  (1/(T-1)) Σ_j ||v_j - v̂_j||^2,
    with v the adjacent-frame differences of each clip."""
    first = ad.sum(ad.square(x[:, 0, :] - x_hat[:, 0, :]), axis=1)
    dv = (x[:, 1:, :] - x[:, :-1, :]) - (x_hat[:, 1:, :] - x_hat[:, :-1, :])
    per_step = ad.sum(ad.square(dv), axis=2)                # (B, T-1)
    return ad.mean(first + ad.mean(per_step, axis=1))


def ref_frame_recon(x: Tensor, x_hat: Tensor, ref_index: int) -> Tensor:
    """mean over batch of ||x_ref - x̂_ref||^2 at the 1-based reference index."""
    k = ref_index - 1
    return ad.mean(ad.sum(ad.square(x[:, k, :] - x_hat[:, k, :]), axis=1))


def pixel_mse(x: Tensor, x_hat: Tensor) -> float:
    """Plain per-pixel mean squared error (diagnostic, not a training term)."""
    return float(np.mean((x.data - x_hat.data) ** 2))


def gather_frames(clips: Tensor, indices) -> Tensor:
    """Per-clip frame selection: clips (B, T, D) + 0-based indices (B,) -> (B, D)."""
    rows = [clips[b:b + 1, int(i), :] for b, i in enumerate(indices)]
    return ad.concat(rows, axis=0)


# -- adversarial pieces -------------------------------------------------------------

def _push_real(p: Tensor) -> Tensor:
    return ad.mean(ad.neg(ad.log(p)))


def _push_fake(p: Tensor) -> Tensor:
    return ad.mean(ad.neg(ad.log(1.0 - p)))


def _encode_generate(bundle: ModelBundle, x: Tensor, stream: RandomStream,
                     ref_index: int = 1):
    """Shared reconstruction path: posterior -> sampled latents -> compose."""
    q_x, q_v = bundle.encode_clips(x, ref_index=ref_index)
    z_x = reparameterize(q_x, stream.split("eps_x"))
    z_v = reparameterize(q_v, stream.split("eps_v"))
    _, _, raw, clip = bundle.compose(z_x, z_v, ref_index=ref_index)
    return q_x, q_v, raw, clip


def _prior_generate(bundle: ModelBundle, b: int, stream: RandomStream,
                    ref_index: int = 1) -> Tensor:
    cfg = bundle.cfg
    z_x = Tensor(stream.split("prior_x").normal((b, cfg.z_content)))
    z_v = Tensor(stream.split("prior_v").normal((b, cfg.z_motion)))
    _, _, _, clip = bundle.compose(z_x, z_v, ref_index=ref_index)
    return clip


def _frame_indices(b: int, t: int, stream: RandomStream) -> np.ndarray:
    return stream.split("frame_idx").integers(0, t, (b,))


# -- the five short-clip losses ------------------------------------------------------

def loss_enc(bundle: ModelBundle, clips, stream: RandomStream) -> LossOutput:
    """Posterior quality: frame reconstruction through the generator plus the
    two KL terms.  Differentiable w.r.t. encoder and generator parameters."""
    x = _as_clip_tensor(clips)
    q_x, q_v, raw, _ = _encode_generate(bundle, x, stream)
    recon = frame_recon(x, raw)
    kl_x, kl_v = gaussian_kl(q_x), gaussian_kl(q_v)
    total = recon + kl_x + kl_v
    return LossOutput(total, {
        "recon": recon.item(), "kl_x": kl_x.item(), "kl_v": kl_v.item(),
        "mse": pixel_mse(x, raw), "total": total.item()})


def loss_enc_v(bundle: ModelBundle, clips, stream: RandomStream) -> LossOutput:
    """Variant objective: the per-frame term is replaced by reconstruction of
    the difference maps (first frame still anchored)."""
    x = _as_clip_tensor(clips)
    q_x, q_v, raw, _ = _encode_generate(bundle, x, stream)
    recon = diff_recon(x, raw)
    kl_x, kl_v = gaussian_kl(q_x), gaussian_kl(q_v)
    total = recon + kl_x + kl_v
    return LossOutput(total, {
        "recon": recon.item(), "kl_x": kl_x.item(), "kl_v": kl_v.item(),
        "mse": pixel_mse(x, raw), "total": total.item()})


def loss_gen(bundle: ModelBundle, clips, stream: RandomStream) -> LossOutput:
    """Generator objective: reconstruction plus four non-saturating
    adversarial terms — image and video discriminators, each scoring clips
    rebuilt from encoded latents and clips drawn from the prior."""
    x = _as_clip_tensor(clips)
    b, t = x.shape[0], x.shape[1]
    _, _, raw, fake_e = _encode_generate(bundle, x, stream)
    fake_p = _prior_generate(bundle, b, stream)
    idx = _frame_indices(b, t, stream)

    recon = frame_recon(x, raw)
    adv = (_push_real(bundle.d_image_prob(gather_frames(fake_e, idx)))
           + _push_real(bundle.d_image_prob(gather_frames(fake_p, idx)))
           + _push_real(bundle.d_video_prob(fake_e))
           + _push_real(bundle.d_video_prob(fake_p)))
    total = recon + adv
    return LossOutput(total, {
        "recon": recon.item(), "adv": adv.item(),
        "mse": pixel_mse(x, raw), "total": total.item()})


def loss_d_image(bundle: ModelBundle, clips, stream: RandomStream) -> LossOutput:
    """Image-discriminator objective on one random frame per clip: real frames
    up, reconstruction fakes and prior fakes down."""
    x = _as_clip_tensor(clips)
    b, t = x.shape[0], x.shape[1]
    _, _, _, fake_e = _encode_generate(bundle, x, stream)
    fake_p = _prior_generate(bundle, b, stream)
    idx = _frame_indices(b, t, stream)

    real = _push_real(bundle.d_image_prob(gather_frames(x, idx)))
    fakes = (_push_fake(bundle.d_image_prob(gather_frames(fake_e, idx)))
             + _push_fake(bundle.d_image_prob(gather_frames(fake_p, idx))))
    total = real + fakes
    return LossOutput(total, {"real": real.item(), "fake": fakes.item(),
                              "total": total.item()})


def loss_d_video(bundle: ModelBundle, clips, stream: RandomStream) -> LossOutput:
    """Video-discriminator objective on whole clips, same three-term shape."""
    x = _as_clip_tensor(clips)
    b = x.shape[0]
    _, _, _, fake_e = _encode_generate(bundle, x, stream)
    fake_p = _prior_generate(bundle, b, stream)

    real = _push_real(bundle.d_video_prob(x))
    fakes = (_push_fake(bundle.d_video_prob(fake_e))
             + _push_fake(bundle.d_video_prob(fake_p)))
    total = real + fakes
    return LossOutput(total, {"real": real.item(), "fake": fakes.item(),
                              "total": total.item()})
