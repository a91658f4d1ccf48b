"""Training loops: the D -> Enc -> G clip step and the recall phase driver.

Each optimization step draws one batch of clips from the long training
videos.  Early steps (the configured fraction) sample frames uniformly from
binned positions — covering slow dynamics — and the remainder uses fixed
step-stride sampling; both strategies see every video at every length.

Stream discipline: step s derives the named stream "step{s}", and each role
(batch choice, each loss) splits its own child, so no loss's draw count can
shift another's randomness and whole runs replay bit-identically.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import backward
from .chain import make_training_pairs, train_step_recall
from .config import RunConfig
from .datasets import step_sample, uniform_sample
from .losses import loss_d_image, loss_d_video, loss_enc, loss_enc_v, loss_gen
from .model import D_GROUP, ENC_GROUP, GEN_GROUP, ModelBundle
from .optim import adam_step
from .rng import RandomStream

__all__ = ["train_step", "sample_batch", "train_loop", "train_loop_recall",
           "build_pairs"]


def train_step(bundle: ModelBundle, clips: np.ndarray,
               stream: RandomStream) -> dict:
    """One full optimization step: discriminators (image + video losses
    summed, one Adam update), then encoders, then generator."""
    cfg = bundle.cfg
    report = {}

    with ad.GradTape():
        d_img = loss_d_image(bundle, clips, stream.split("d_image"))
        d_vid = loss_d_video(bundle, clips, stream.split("d_video"))
        d_total = d_img.total + d_vid.total
        d_params = bundle.params(D_GROUP)
        d_grads = backward(d_total, d_params)
    bundle.set_params(D_GROUP, adam_step(bundle.opt_d, d_params, d_grads))
    report["d_image"] = d_img.parts
    report["d_video"] = d_vid.parts

    enc_loss = loss_enc_v if cfg.loss_variant == "diff" else loss_enc
    with ad.GradTape():
        enc = enc_loss(bundle, clips, stream.split("enc"))
        enc_params = bundle.params(ENC_GROUP)
        enc_grads = backward(enc.total, enc_params)
    bundle.set_params(ENC_GROUP, adam_step(bundle.opt_enc, enc_params, enc_grads))
    report["enc"] = enc.parts

    with ad.GradTape():
        gen = loss_gen(bundle, clips, stream.split("gen"))
        gen_params = bundle.params(GEN_GROUP)
        gen_grads = backward(gen.total, gen_params)
    bundle.set_params(GEN_GROUP, adam_step(bundle.opt_gen, gen_params, gen_grads))
    report["gen"] = gen.parts
    return report


def sample_batch(videos, cfg: RunConfig, step_index: int,
                 stream: RandomStream) -> np.ndarray:
    """One (batch, t_c, H, W, C) batch per the uniform-then-step schedule."""
    uniform_steps = int(round(cfg.uniform_fraction * cfg.steps))
    use_uniform = step_index < uniform_steps
    which = stream.split("videos").choice(len(videos), cfg.batch)
    clips = []
    for i, vid_idx in enumerate(which):
        video = videos[int(vid_idx)]
        cstream = stream.split(f"clip{i}")
        if use_uniform:
            clips.append(uniform_sample(video, cstream, bins=cfg.t_c))
        else:
            span = cfg.sample_step * (cfg.t_c - 1)
            max_start = len(video) - span - 1
            if max_start < 0:
                raise ValueError(
                    f"video of {len(video)} frames is too short for step "
                    f"sampling {cfg.t_c} frames at stride {cfg.sample_step}")
            start = int(cstream.integers(0, max_start + 1, ()))
            clips.append(step_sample(video, start, cfg.sample_step, cfg.t_c))
    return np.stack(clips)


def train_loop(bundle: ModelBundle, videos, progress=None) -> list[dict]:
    """Run cfg.steps optimization steps; returns the per-step loss reports."""
    cfg = bundle.cfg
    root = RandomStream.from_seed(cfg.seed, "train")
    reports = []
    for step in range(cfg.steps):
        sstream = root.split(f"step{step}")
        batch = sample_batch(videos, cfg, step, sstream.split("batch"))
        reports.append(train_step(bundle, batch, sstream))
        if progress is not None:
            progress(step, reports[-1])
    return reports


def build_pairs(videos, cfg: RunConfig):
    """Training pairs at the configured stride: overlapping (stride r) when
    cfg.ovi, disjoint consecutive clips (stride t_c) otherwise."""
    stride = cfg.r if cfg.ovi else cfg.t_c
    return make_training_pairs(videos, cfg.t_c, stride)


def train_loop_recall(bundle: ModelBundle, pairs, progress=None) -> list[dict]:
    """Run cfg.steps recall steps over uniformly drawn pair batches."""
    cfg = bundle.cfg
    if not pairs:
        raise ValueError("no training pairs — videos shorter than t_c + stride")
    root = RandomStream.from_seed(cfg.seed, "train-recall")
    reports = []
    for step in range(cfg.steps):
        sstream = root.split(f"step{step}")
        which = sstream.split("pairs").choice(len(pairs), cfg.batch)
        batch = [pairs[int(i)] for i in which]
        reports.append(train_step_recall(bundle, batch, sstream))
        if progress is not None:
            progress(step, reports[-1])
    return reports
