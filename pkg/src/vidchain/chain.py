"""Long-video machinery: overlapping training pairs, the joint recall
objective, pair-level discriminator losses, and fixed-memory chained
generation.

Training views a long video as clips taken every `stride` frames; a
``ClipPair`` is two such clips one stride apart, sharing ``t_c - stride``
frames.  The pair losses push the generator to make clip j+1 continue
clip j: the merged video-discriminator loss scores a real clip against two
generated ones, where the second is *chained* from the first — its latents
are obtained by re-encoding the first generated clip, so the discriminator
gradient reaches the generator through the chaining path.

Generation then runs the same chaining forever in fixed memory:
``chain_generate`` keeps only the previous clip's overlap tail (the last
``t_c - r`` frames) plus small latent state, emits each clip's first ``r``
frames (the final clip fully), and accounts every frame-sized buffer it
retains against a budget of two clips.

Latent modes:

* ``sampled`` — first clip from prior draws; each next content code sampled
  from the posterior of the carried reference frame, motion re-drawn from
  the prior.
* ``mean`` — zero latents for the first clip, posterior means afterwards
  (content from the carried frame, motion from the previous clip's
  difference maps); fully deterministic, no random stream touched.
* ``seeded`` — like ``mean`` for content, but the motion code is drawn once
  for the first clip and then frozen, giving one consistent "motion style".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, backward
from .gaussian import reparameterize, gaussian_kl
from .losses import (
    LossOutput, _as_clip_tensor, _frame_indices, _push_fake, _push_real,
    gather_frames, pixel_mse, ref_frame_recon,
)
from .model import D_GROUP, ENC_GROUP, GEN_GROUP, ModelBundle, clip_diffs
from .optim import adam_step
from .rng import RandomStream
from .video import LongVideo

__all__ = [
    "ClipPair", "make_training_pairs", "pairs_to_clips",
    "loss_rencg", "loss_d_image_r", "loss_d_video_r1", "loss_d_video_merged",
    "merged_video_terms", "train_step_recall",
    "FrameBudget", "ChainResult", "chain_generate", "chain_overlap_mismatch",
]


# -- training pairs ------------------------------------------------------------

@dataclass
class ClipPair:
    """Two clips of one source video, `stride` frames apart.  When
    stride < clip length they share frames: first[stride + i] == second[i]."""
    first: np.ndarray      # (T, H, W, C)
    second: np.ndarray     # (T, H, W, C)
    source: int            # index of the source video
    offset: int            # start frame of `first` within the source
    stride: int            # second clip starts at offset + stride

    @property
    def second_offset(self) -> int:
        return self.offset + self.stride


def make_training_pairs(videos, t_c: int, stride: int):
    """All (clip at k*stride, clip at (k+1)*stride) pairs of each video.

    Returns (pairs, skipped) where skipped lists the indices of videos too
    short to contribute (length < t_c + stride).  Overlap regions are
    verified bit-identical at construction.
    """
    if not 1 <= stride <= t_c:
        raise ValueError(f"pair stride must be in 1..{t_c}, got {stride}")
    pairs: list[ClipPair] = []
    skipped: list[int] = []
    for src, video in enumerate(videos):
        video = np.asarray(video)
        if len(video) < t_c + stride:
            skipped.append(src)
            continue
        k = 0
        while (k + 1) * stride + t_c <= len(video):
            a = k * stride
            b = a + stride
            first, second = video[a:a + t_c], video[b:b + t_c]
            if stride < t_c and not np.array_equal(first[stride:], second[:t_c - stride]):
                raise ValueError(f"video {src}: clips at {a} and {b} disagree "
                                 "on their shared frames")
            pairs.append(ClipPair(first.copy(), second.copy(), src, a, stride))
            k += 1
    return pairs, skipped


def pairs_to_clips(pairs) -> np.ndarray:
    """Flatten a pair batch into individual clips: (2B, T, H, W, C),
    firsts then seconds."""
    if len(pairs) == 0:
        raise ValueError("empty batch")
    return np.stack([p.first for p in pairs] + [p.second for p in pairs])


def _ref_index(t_c: int) -> int:
    """The 1-based mid-clip reference index used by all recall losses."""
    return max(1, t_c // 2)


def clip_recon(x: Tensor, x_hat: Tensor) -> Tensor:
    """mean over batch of (1/T) Σ_j ||x_j - x̂_j||^2 (no extra first-frame term)."""
    return ad.mean(ad.mean(ad.sum(ad.square(x - x_hat), axis=2), axis=1))


# -- recall losses ----------------------------------------------------------------

def loss_rencg(bundle: ModelBundle, pairs, stream: RandomStream) -> LossOutput:
    """Joint encoder+generator objective over the individual clips of a pair
    batch: mid-clip reference-frame reconstruction, full-clip reconstruction
    built from that reference, both KL terms, and non-saturating adversarial
    terms from both discriminators."""
    x = _as_clip_tensor(pairs_to_clips(pairs))
    b, t = x.shape[0], x.shape[1]
    ref = _ref_index(t)

    q_x, q_v = bundle.encode_clips(x, ref_index=ref)
    z_x = reparameterize(q_x, stream.split("eps_x"))
    z_v = reparameterize(q_v, stream.split("eps_v"))
    _, _, raw, fake = bundle.compose(z_x, z_v, ref_index=ref)

    ref_term = ref_frame_recon(x, raw, ref)
    full_term = clip_recon(x, raw)
    kl_x, kl_v = gaussian_kl(q_x), gaussian_kl(q_v)
    idx = _frame_indices(b, t, stream)
    adv = (_push_real(bundle.d_video_prob(fake))
           + _push_real(bundle.d_image_prob(gather_frames(fake, idx))))
    total = ref_term + full_term + kl_x + kl_v + adv
    return LossOutput(total, {
        "recon_ref": ref_term.item(), "recon_full": full_term.item(),
        "kl_x": kl_x.item(), "kl_v": kl_v.item(), "adv": adv.item(),
        "mse": pixel_mse(x, raw), "total": total.item()})


def _encoded_fakes(bundle: ModelBundle, x: Tensor, stream: RandomStream) -> Tensor:
    """Clamped clips generated from the posteriors of x at the mid reference."""
    ref = _ref_index(x.shape[1])
    q_x, q_v = bundle.encode_clips(x, ref_index=ref)
    z_x = reparameterize(q_x, stream.split("eps_x"))
    z_v = reparameterize(q_v, stream.split("eps_v"))
    return bundle.compose(z_x, z_v, ref_index=ref)[3]


def loss_d_image_r(bundle: ModelBundle, pairs, stream: RandomStream) -> LossOutput:
    """Two-term image-discriminator loss (no prior-sample term): real frames
    vs frames of clips rebuilt from encoded latents."""
    x = _as_clip_tensor(pairs_to_clips(pairs))
    fake = _encoded_fakes(bundle, x, stream)
    idx = _frame_indices(x.shape[0], x.shape[1], stream)
    real = _push_real(bundle.d_image_prob(gather_frames(x, idx)))
    fake_t = _push_fake(bundle.d_image_prob(gather_frames(fake, idx)))
    total = real + fake_t
    return LossOutput(total, {"real": real.item(), "fake": fake_t.item(),
                              "total": total.item()})


def loss_d_video_r1(bundle: ModelBundle, pairs, stream: RandomStream) -> LossOutput:
    """Two-term whole-clip discriminator loss (no prior-sample term)."""
    x = _as_clip_tensor(pairs_to_clips(pairs))
    fake = _encoded_fakes(bundle, x, stream)
    real = _push_real(bundle.d_video_prob(x))
    fake_t = _push_fake(bundle.d_video_prob(fake))
    total = real + fake_t
    return LossOutput(total, {"real": real.item(), "fake": fake_t.item(),
                              "total": total.item()})


def chain_ref_frame(t_c: int, stride: int) -> int:
    """1-based index, within the previous clip, of the frame that becomes the
    next clip's reference: ideally stride + t_c//2, clamped into the clip."""
    return min(stride + t_c // 2, t_c)


def merged_video_terms(bundle: ModelBundle, pairs, stream: RandomStream,
                       stride: int | None = None):
    """The three expectations of the merged-clip discriminator objective:
    (real clip up, first generated clip down, chained generated clip down).

    The chained clip's latents re-encode the first *generated* clip: content
    from its frame at ``chain_ref_frame``, motion from its difference maps —
    so both generated clips lie on the discriminator's input path.
    """
    if len(pairs) == 0:
        raise ValueError("empty batch")
    stride = bundle.cfg.r if stride is None else stride
    real = _as_clip_tensor(np.stack([p.first for p in pairs]))
    t = real.shape[1]
    ref = _ref_index(t)

    # first fake: rebuild the pair's first clip from its posterior
    q_x, q_v = bundle.encode_clips(real, ref_index=ref)
    z_x = reparameterize(q_x, stream.split("eps_x"))
    z_v = reparameterize(q_v, stream.split("eps_v"))
    fake1 = bundle.compose(z_x, z_v, ref_index=ref)[3]

    # second fake: chain from the first — re-encode fake1's carried frame
    # and difference maps, then compose one stride later
    carry = chain_ref_frame(t, stride)
    q_x2 = bundle.content_posterior(fake1[:, carry - 1, :])
    q_v2 = bundle.motion_posterior(clip_diffs(fake1))
    z_x2 = reparameterize(q_x2, stream.split("eps2_x"))
    z_v2 = reparameterize(q_v2, stream.split("eps2_v"))
    fake2 = bundle.compose(z_x2, z_v2, ref_index=min(ref, t - min(stride, t - 1)))[3]

    t_real = _push_real(bundle.d_video_prob(real))
    t_fake1 = _push_fake(bundle.d_video_prob(fake1))
    t_fake2 = _push_fake(bundle.d_video_prob(fake2))
    return t_real, t_fake1, t_fake2


def loss_d_video_merged(bundle: ModelBundle, pairs, stream: RandomStream,
                        stride: int | None = None) -> LossOutput:
    """Merged-clip video-discriminator loss: one real clip against the two
    chained generated clips of each pair."""
    t_real, t_fake1, t_fake2 = merged_video_terms(bundle, pairs, stream, stride)
    total = t_real + t_fake1 + t_fake2
    return LossOutput(total, {
        "real": t_real.item(), "fake1": t_fake1.item(), "fake2": t_fake2.item(),
        "total": total.item()})


# -- recall training step ------------------------------------------------------------

def train_step_recall(bundle: ModelBundle, pairs, stream: RandomStream) -> dict:
    """Discriminators first (image + video, merged when cfg.mgv), then one
    joint update of encoders and generator on the recall objective."""
    report = {}

    with ad.GradTape():
        d_img = loss_d_image_r(bundle, pairs, stream.split("d_image"))
        if bundle.cfg.mgv:
            d_vid = loss_d_video_merged(bundle, pairs, stream.split("d_video"))
        else:
            d_vid = loss_d_video_r1(bundle, pairs, stream.split("d_video"))
        d_total = d_img.total + d_vid.total
        d_params = bundle.params(D_GROUP)
        d_grads = backward(d_total, d_params)
    bundle.set_params(D_GROUP, adam_step(bundle.opt_d, d_params, d_grads))
    report["d_image"] = d_img.parts
    report["d_video"] = d_vid.parts

    with ad.GradTape():
        joint = loss_rencg(bundle, pairs, stream.split("rencg"))
        enc_params = bundle.params(ENC_GROUP)
        gen_params = bundle.params(GEN_GROUP)
        grads = backward(joint.total, enc_params + gen_params)
    n_enc = len(enc_params)
    bundle.set_params(ENC_GROUP, adam_step(bundle.opt_enc, enc_params, grads[:n_enc]))
    bundle.set_params(GEN_GROUP, adam_step(bundle.opt_gen, gen_params, grads[n_enc:]))
    report["rencg"] = joint.parts
    return report


# -- fixed-memory chained generation ------------------------------------------------

class FrameBudget:
    """Counts the frame-sized buffers the chain retains; peak must stay
    within two clips' worth regardless of how many clips are generated."""

    def __init__(self):
        self.current = 0
        self.peak = 0

    def acquire(self, frames: int) -> None:
        self.current += frames
        self.peak = max(self.peak, self.current)

    def release(self, frames: int) -> None:
        self.current -= frames
        if self.current < 0:
            raise RuntimeError("frame budget released more than acquired")


@dataclass
class ChainResult:
    video: LongVideo | None          # None when frames went to a sink
    frames_emitted: int
    clip_count: int
    stride: int
    mismatches: list = field(default_factory=list)  # per-seam mean |tail - head|
    peak_frames: int = 0

    @property
    def mean_mismatch(self) -> float:
        return float(np.mean(self.mismatches)) if self.mismatches else 0.0


def chain_generate(bundle: ModelBundle, n_clips: int, mode: str = "sampled",
                   stream: RandomStream | None = None, r: int | None = None,
                   sink=None) -> ChainResult:
    """Generate (n_clips - 1) * r + t_c frames by chaining clips through the
    encoders, keeping at most two clips' worth of frames alive.

    `sink(block)` receives (k, H, W, C) float64 frame blocks as they are
    emitted; without a sink the frames are collected into a LongVideo.
    """
    cfg = bundle.cfg
    t_c = cfg.t_c
    r = cfg.r if r is None else r
    if n_clips < 1:
        raise ValueError(f"n_clips must be >= 1, got {n_clips}")
    if not 1 <= r < t_c:
        raise ValueError(f"need 1 <= r < t_c, got r={r}, t_c={t_c}")
    if mode not in ("sampled", "mean", "seeded"):
        raise ValueError(f"unknown generation mode {mode!r}")
    if stream is None:
        stream = RandomStream.from_seed(cfg.seed, "chain-generate")

    olap = t_c - r                       # tail length = shared frames per seam
    ref0 = _ref_index(t_c)               # reference index for the first clip
    refj = min(ref0, t_c - r)            # where the carried frame lands locally
    carry = chain_ref_frame(t_c, r)      # 1-based index of the carried frame
    budget = FrameBudget()
    collected = [] if sink is None else None

    tail: np.ndarray | None = None       # (olap, D) frames shared with next clip
    carried_motion_mean: np.ndarray | None = None
    frozen_z_v: np.ndarray | None = None
    mismatches: list[float] = []
    emitted = 0

    for j in range(n_clips):
        cstream = stream.split(f"clip{j}")
        if j == 0:
            if mode == "mean":
                z_x = np.zeros((1, cfg.z_content))
                z_v = np.zeros((1, cfg.z_motion))
            else:
                z_x = cstream.split("prior_x").normal((1, cfg.z_content))
                z_v = cstream.split("prior_v").normal((1, cfg.z_motion))
                if mode == "seeded":
                    frozen_z_v = z_v
            ref = ref0
        else:
            q_x = bundle.content_posterior(Tensor(tail[carry - r - 1][None]))
            if mode == "sampled":
                z_x = reparameterize(q_x, cstream.split("eps_x")).data
                z_v = cstream.split("prior_v").normal((1, cfg.z_motion))
            elif mode == "mean":
                z_x = q_x.mu.data
                z_v = carried_motion_mean
            else:  # seeded
                z_x = q_x.mu.data
                z_v = frozen_z_v
            ref = refj

        clip = bundle.compose(Tensor(z_x), Tensor(z_v), ref_index=ref)[3]
        clip = clip.data[0]              # (t_c, D)
        budget.acquire(t_c)

        if tail is not None:
            mismatches.append(float(np.abs(tail - clip[:olap]).mean()))
            budget.release(olap)
            tail = None

        block = clip[:r] if j < n_clips - 1 else clip
        block = block.reshape((-1,) + cfg.frame_shape)
        if sink is None:
            collected.append(block.copy())
        else:
            sink(block)
        emitted += len(block)

        if mode == "mean":
            diffs = np.diff(clip, axis=0)            # (t_c - 1, D)
            budget.acquire(t_c - 1)
            q_v = bundle.motion_posterior(Tensor(diffs.reshape(1, -1)))
            carried_motion_mean = q_v.mu.data
            budget.release(t_c - 1)

        if j < n_clips - 1:
            tail = clip[r:].copy()
            budget.acquire(olap)
        budget.release(t_c)

    video = None
    if sink is None:
        video = LongVideo(np.concatenate(collected, axis=0), n_clips, r, t_c)
    return ChainResult(video, emitted, n_clips, r, mismatches, budget.peak)


def chain_overlap_mismatch(bundle: ModelBundle, n_clips: int,
                           mode: str = "mean",
                           stream: RandomStream | None = None,
                           r: int | None = None) -> float:
    """Mean absolute tail-vs-head disagreement across all seams of one chain
    (frames are discarded as they are produced)."""
    result = chain_generate(bundle, n_clips, mode=mode, stream=stream, r=r,
                            sink=lambda block: None)
    return result.mean_mismatch
