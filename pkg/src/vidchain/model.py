"""The two-stream clip model: encoders, generator, discriminators, bundle.

Layout (all dense stacks over flattened 16x16x1 frames):

* ``content_enc``: frame -> Gaussian posterior over the content code z_x.
* ``motion_enc``: flattened frame-difference sequence -> posterior over z_v.
* Generator, three streams: ``g_c`` maps z_x to a content frame; ``g_t`` maps
  (z_v, z_x) to a difference sequence; ``fusion`` maps (z_x, z_v) to
  per-frame residual corrections added after the frame recursion.  Any stream
  can be disabled (emits zeros) for ablations.
* ``d_image`` / ``d_video``: frame / whole-clip discriminators; logits are
  clamped to [-15, 15] before the sigmoid so probabilities stay strictly
  inside (0, 1) and log terms stay finite.

A clip batch travels as a Tensor of shape (B, T, D) with D = H*W*C.  The
generator composes a clip by placing the content frame at a 1-based
reference index and integrating differences backward and forward from it;
``generate`` then adds fusion residuals and clamps to the pixel range.

A ``ModelBundle`` owns all seven parameter stacks plus three Adam states
(discriminators share one, encoders one, generator one) and round-trips
through a checkpoint file bit-exactly, config echo included.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import ConfigError, RunConfig
from .container import load_checkpoint, save_checkpoint
from .gaussian import GaussianParams
from .layers import apply_mlp, init_mlp
from .optim import AdamState
from .rng import RandomStream

__all__ = ["ModelBundle", "COMPONENTS", "D_GROUP", "ENC_GROUP", "GEN_GROUP",
           "LOGIT_LIMIT", "clips_to_tensor", "clip_diffs", "latent_combine"]

COMPONENTS = ("content_enc", "motion_enc", "g_c", "g_t", "fusion",
              "d_image", "d_video")
D_GROUP = ("d_image", "d_video")
ENC_GROUP = ("content_enc", "motion_enc")
GEN_GROUP = ("g_c", "g_t", "fusion")
LOGIT_LIMIT = 15.0


def clips_to_tensor(clips: np.ndarray) -> Tensor:
    """(T,H,W,C) or (B,T,H,W,C) numpy pixels -> constant Tensor (B, T, D)."""
    clips = np.asarray(clips, dtype=np.float64)
    if clips.ndim == 4:
        clips = clips[None]
    if clips.ndim != 5:
        raise ValueError(f"expected a clip or clip batch, got shape {clips.shape}")
    b, t = clips.shape[:2]
    return Tensor(clips.reshape(b, t, -1))


def clip_diffs(clips: Tensor) -> Tensor:
    """Adjacent-frame differences of a (B, T, D) clip, flattened to
    (B, (T-1)*D) — the motion encoder's input."""
    b, t, d = clips.shape
    diffs = clips[:, 1:, :] - clips[:, :-1, :]
    return ad.reshape(diffs, (b, (t - 1) * d))


def latent_combine(z_a, z_b):
    """Elementwise sum of two (content, motion) latent pairs."""
    (xa, va), (xb, vb) = z_a, z_b
    if xa.shape != xb.shape or va.shape != vb.shape:
        raise ValueError(f"latent dims differ: {xa.shape}/{va.shape} vs "
                         f"{xb.shape}/{vb.shape}")
    return (xa + xb, va + vb)


def _sizes(cfg: RunConfig) -> dict:
    d, t = cfg.frame_dim, cfg.t_c
    return {
        "content_enc": [d, cfg.hidden, 2 * cfg.z_content],
        "motion_enc": [(t - 1) * d, cfg.hidden, 2 * cfg.z_motion],
        "g_c": [cfg.z_content, cfg.hidden, d],
        "g_t": [cfg.z_motion + cfg.z_content, cfg.hidden, (t - 1) * d],
        "fusion": [cfg.z_content + cfg.z_motion, cfg.hidden, t * d],
        "d_image": [d, cfg.hidden, 1],
        "d_video": [t * d, cfg.hidden, 1],
    }


class ModelBundle:
    def __init__(self, cfg: RunConfig, components: dict,
                 opt_d: AdamState, opt_enc: AdamState, opt_gen: AdamState):
        self.cfg = cfg
        self.components = components
        self.opt_d = opt_d
        self.opt_enc = opt_enc
        self.opt_gen = opt_gen

    @classmethod
    def init(cls, cfg: RunConfig, stream: RandomStream | None = None) -> "ModelBundle":
        stream = stream or RandomStream.from_seed(cfg.seed, "model-init")
        sizes = _sizes(cfg)
        components = {name: init_mlp(stream.split(name), sizes[name], cfg.bias_init)
                      for name in COMPONENTS}
        mk = lambda: AdamState(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
        return cls(cfg, components, mk(), mk(), mk())

    # -- parameter groups -----------------------------------------------------
    def params(self, group) -> list[Tensor]:
        return [p for name in group for p in self.components[name]]

    def set_params(self, group, tensors) -> None:
        tensors = list(tensors)
        pos = 0
        for name in group:
            n = len(self.components[name])
            self.components[name] = tensors[pos:pos + n]
            pos += n
        if pos != len(tensors):
            raise ValueError("parameter count mismatch for group")

    # -- encoders ---------------------------------------------------------------
    def content_posterior(self, frames: Tensor) -> GaussianParams:
        """Content-code posterior from a frame batch (B, D)."""
        zx = self.cfg.z_content
        out = apply_mlp(self.components["content_enc"], frames)
        return GaussianParams(out[:, :zx], out[:, zx:])

    def motion_posterior(self, diffs: Tensor) -> GaussianParams:
        """Motion-code posterior from flattened difference sequences
        (B, (T-1)*D)."""
        zv = self.cfg.z_motion
        out = apply_mlp(self.components["motion_enc"], diffs)
        return GaussianParams(out[:, :zv], out[:, zv:])

    def encode_parts(self, content_in: Tensor, motion_in: Tensor):
        """Posteriors from already-split encoder inputs: content_in (B, D),
        motion_in (B, (T-1)*D)."""
        return self.content_posterior(content_in), self.motion_posterior(motion_in)

    def encode_clips(self, clips: Tensor, ref_index: int = 1):
        """Posteriors from a (B, T, D) clip batch; the content encoder reads
        the frame at 1-based `ref_index`, the motion encoder all differences."""
        t = clips.shape[1]
        if not 1 <= ref_index <= t:
            raise ValueError(f"ref_index {ref_index} outside 1..{t}")
        return self.encode_parts(clips[:, ref_index - 1, :], clip_diffs(clips))

    def encode(self, clips: np.ndarray, ref_index: int = 1):
        """Public entry point: numpy clip (T,H,W,C) or batch (B,T,H,W,C)."""
        clips = np.asarray(clips)
        expected = self.cfg.clip_shape
        if clips.shape[-4:] != expected:
            raise ValueError(f"clip shape {clips.shape} does not match "
                             f"configured {expected}")
        return self.encode_clips(clips_to_tensor(clips), ref_index)

    # -- generator ------------------------------------------------------------
    def compose(self, z_x: Tensor, z_v: Tensor, ref_index: int = 1):
        """Full generator pass. Returns (content (B,D), motion (B,(T-1)*D),
        raw clip (B,T,D) before clamping, clamped clip (B,T,D))."""
        cfg = self.cfg
        if z_x.ndim != 2 or z_x.shape[1] != cfg.z_content:
            raise ValueError(f"content latent shape {z_x.shape} != "
                             f"(batch, {cfg.z_content})")
        if z_v.ndim != 2 or z_v.shape[1] != cfg.z_motion:
            raise ValueError(f"motion latent shape {z_v.shape} != "
                             f"(batch, {cfg.z_motion})")
        if not 1 <= ref_index <= cfg.t_c:
            raise ValueError(f"ref_index {ref_index} outside 1..{cfg.t_c}")
        b, d, t = z_x.shape[0], cfg.frame_dim, cfg.t_c

        if cfg.disable_content:
            content = Tensor(np.zeros((b, d)))
        else:
            content = apply_mlp(self.components["g_c"], z_x)
        if cfg.disable_motion:
            motion = Tensor(np.zeros((b, (t - 1) * d)))
        else:
            motion = apply_mlp(self.components["g_t"], ad.concat([z_v, z_x], axis=1))

        steps = ad.reshape(motion, (b, t - 1, d))
        frames: list = [None] * t
        frames[ref_index - 1] = content
        for k in range(ref_index - 1, 0, -1):          # integrate backward
            frames[k - 1] = frames[k] - steps[:, k - 1, :]
        for k in range(ref_index - 1, t - 1):          # integrate forward
            frames[k + 1] = frames[k] + steps[:, k, :]
        raw = ad.concat([ad.reshape(f, (b, 1, d)) for f in frames], axis=1)

        if not cfg.disable_fusion:
            residual = apply_mlp(self.components["fusion"],
                                 ad.concat([z_x, z_v], axis=1))
            raw = raw + ad.reshape(residual, (b, t, d))
        return content, motion, raw, ad.clip(raw, -1.0, 1.0)

    def generate(self, z_x: Tensor, z_v: Tensor, ref_index: int = 1):
        """(content frame, difference sequence, clamped clip (B,T,D))."""
        content, motion, _, clip = self.compose(z_x, z_v, ref_index)
        return content, motion, clip

    # -- discriminators -----------------------------------------------------------
    def d_image_prob(self, frames: Tensor) -> Tensor:
        """P(real) for a frame batch (B, D), strictly inside (0, 1)."""
        logit = apply_mlp(self.components["d_image"], frames)
        return ad.sigmoid(ad.clip(logit, -LOGIT_LIMIT, LOGIT_LIMIT))

    def d_video_prob(self, clips: Tensor) -> Tensor:
        """P(real) for a clip batch (B, T, D) or (B, T*D)."""
        if clips.ndim == 3:
            b, t, d = clips.shape
            clips = ad.reshape(clips, (b, t * d))
        logit = apply_mlp(self.components["d_video"], clips)
        return ad.sigmoid(ad.clip(logit, -LOGIT_LIMIT, LOGIT_LIMIT))

    # -- checkpointing -----------------------------------------------------------
    def state_arrays(self) -> dict:
        arrays = {}
        for name in COMPONENTS:
            for i, p in enumerate(self.components[name]):
                arrays[f"{name}.{i}"] = p.data
        for opt_name, opt in (("opt_d", self.opt_d), ("opt_enc", self.opt_enc),
                              ("opt_gen", self.opt_gen)):
            for key, arr in opt.state_arrays().items():
                arrays[f"{opt_name}.{key}"] = arr
        return arrays

    def load_state_arrays(self, arrays: dict) -> None:
        """Restore parameters and optimizer moments from a state_arrays()
        dict (shape-checked against this bundle's architecture)."""
        sizes = _sizes(self.cfg)
        for name in COMPONENTS:
            n_params = 2 * (len(sizes[name]) - 1)
            tensors = []
            for i in range(n_params):
                key = f"{name}.{i}"
                if key not in arrays:
                    raise ConfigError(f"checkpoint is missing parameter {key}")
                expected = self.components[name][i].shape
                if arrays[key].shape != expected:
                    raise ConfigError(f"checkpoint parameter {key} has shape "
                                      f"{arrays[key].shape}, expected {expected}")
                tensors.append(Tensor(arrays[key], requires_grad=True))
            self.components[name] = tensors
        for opt_name, opt in (("opt_d", self.opt_d), ("opt_enc", self.opt_enc),
                              ("opt_gen", self.opt_gen)):
            keys = {k[len(opt_name) + 1:]: v for k, v in arrays.items()
                    if k.startswith(opt_name + ".")}
            if keys:
                opt.load_state_arrays(keys)

    def save(self, path) -> None:
        save_checkpoint(path, self.cfg.to_dict(), self.state_arrays())

    @classmethod
    def load(cls, path, cfg: RunConfig | None = None) -> "ModelBundle":
        """Rebuild a bundle from a checkpoint.  With `cfg` given, its
        architecture fields must agree with the stored config (schedule
        fields may differ and the given cfg wins); otherwise the stored
        config is used as-is."""
        stored_cfg, arrays = load_checkpoint(path)
        if cfg is None:
            cfg = RunConfig.from_dict(stored_cfg)
        else:
            cfg.ensure_arch_matches(stored_cfg)
        bundle = cls.init(cfg)
        bundle.load_state_arrays(arrays)
        return bundle
