"""Training the clip model, scaled down to finish in about a minute.

One optimization step runs three phases in order: both discriminators
(real vs generated, on frames and on whole clips), then the two
variational encoders (reconstruction + KL), then the generator (fool the
discriminators + reconstruct + match encodings).  This script trains a
small model on a small shapes dataset and prints the loss table as it
goes; watch the encoder MSE fall while the discriminators hover near
balance instead of winning outright.
"""

import os
import tempfile

from vidchain.config import RunConfig
from vidchain.container import load_dataset
from vidchain.datasets import gen_shapes_dataset
from vidchain.model import ModelBundle
from vidchain.training import train_loop

CFG = RunConfig(
    t_c=8, r=4, height=8, width=8, channels=1,
    z_content=16, z_motion=6, hidden=32,
    batch=4, steps=120, seed=0,
)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        gen_shapes_dataset(tmp, count=40, length=24, seed=0, height=8, width=8, square=2)
        videos, _ = load_dataset(os.path.join(tmp, "manifest.tsv"))
    print(f"{len(videos)} videos of {videos[0].shape[0]} frames, "
          f"{videos[0].shape[1]}x{videos[0].shape[2]} pixels")
    print(f"{'step':>4}  {'enc mse':>9}  {'enc kl':>8}  {'d_image':>8}  "
          f"{'d_video':>8}  {'gen':>8}")

    bundle = ModelBundle.init(CFG)

    def progress(step, report):
        if step % 20 == 0 or step == CFG.steps - 1:
            kl = report["enc"]["kl_x"] + report["enc"]["kl_v"]
            print(f"{step:>4}  {report['enc']['mse']:>9.5f}  "
                  f"{kl:>8.4f}  "
                  f"{report['d_image']['total']:>8.4f}  "
                  f"{report['d_video']['total']:>8.4f}  "
                  f"{report['gen']['total']:>8.4f}")

    reports = train_loop(bundle, videos, progress=progress)
    first, last = reports[0], reports[-1]
    drop = last["enc"]["mse"] / first["enc"]["mse"]
    print(f"\nencoder mse: {first['enc']['mse']:.5f} -> "
          f"{last['enc']['mse']:.5f}  ({drop:.1%} of start)")
    print("a discriminator loss pinned at 0 would mean collapse; "
          "values near 2*ln2 ≈ 1.39 mean D is being fooled half the time")


if __name__ == "__main__":
    main()
