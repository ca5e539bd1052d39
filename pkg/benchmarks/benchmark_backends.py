"""Compare the compiled kernel backend against the pure-python fallback.

Times the two dense product kernels on training-sized operands, checks
that both backends return bit-identical results, and reports numpy's
BLAS-backed matmul as a reference point.  Then times a short end-to-end
training run under each backend by launching a fresh interpreter with
ALTTRAIN_BACKEND set, since backend selection happens at import time.

Run from the repository root:

    python3 benchmarks/benchmark_backends.py
"""

import os
import subprocess
import sys
import tempfile
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from alttrain import backends

KERNEL_SHAPES = [
    (256, 2, 64),
    (256, 64, 64),
    (256, 512, 512),
    (5600, 64, 64),
]

TRAIN_CONFIG = """\
dataset.kind = synthetic
dataset.size = 2000
dataset.seed = 0
arch.trunk = relu:64,relu:64,relu:64
arch.branch.1 = relu:64,relu:64,softmax:4
arch.branch.2 = relu:64,relu:64,linear:1
loss.kinds = categorical_cross_entropy,binary_cross_entropy_from_logits
optimizer.kind = sg
optimizer.epochs = 20
optimizer.batch_size = 256
schedule.kind = constant
schedule.start_lr = 1e-3
seeds = 1
output_dir = {out_dir}
"""


def time_call(fn, a, b, min_seconds=0.2):
    fn(a, b)
    rounds = 1
    while True:
        start = time.perf_counter()
        for _ in range(rounds):
            fn(a, b)
        elapsed = time.perf_counter() - start
        if elapsed >= min_seconds:
            return elapsed / rounds
        rounds = max(rounds * 2, int(rounds * min_seconds / max(elapsed, 1e-9)))


def bench_kernels():
    impls = dict(backends._IMPLS)
    if "compiled" not in impls:
        print("compiled backend not built; benchmarking the fallback only")
    rng = np.random.default_rng(0)
    print("kernel benchmark (GFLOP/s, higher is better)")
    header = f"{'shape':>18}  {'kernel':>9}"
    for name in impls:
        header += f"  {name:>10}"
    header += f"  {'numpy':>10}"
    print(header)
    for m, k, n in KERNEL_SHAPES:
        a = rng.standard_normal((m, k))
        b = rng.standard_normal((k, n))
        at = np.ascontiguousarray(a.T)
        flops = 2.0 * m * k * n
        for kernel_idx, kernel_name, x, y, ref in (
            (0, "matmul", a, b, a @ b),
            (1, "matmul_tn", at, b, at.T @ b),
        ):
            row = f"{f'{m}x{k}x{n}':>18}  {kernel_name:>9}"
            outputs = {}
            for name, fns in impls.items():
                seconds = time_call(fns[kernel_idx], x, y)
                outputs[name] = fns[kernel_idx](x, y)
                row += f"  {flops / seconds / 1e9:>10.2f}"
            numpy_fn = (lambda p, q: p @ q) if kernel_idx == 0 else (
                lambda p, q: p.T @ q)
            seconds = time_call(numpy_fn, x, y)
            row += f"  {flops / seconds / 1e9:>10.2f}"
            print(row)
            if len(outputs) == 2:
                same = np.array_equal(outputs["compiled"], outputs["python"])
                if not same:
                    print("  WARNING: backends disagree bitwise on this shape")
                allclose = np.allclose(ref, next(iter(outputs.values())),
                                       rtol=1e-10, atol=1e-12)
                if not allclose:
                    print("  WARNING: kernels disagree with numpy reference")


def bench_training():
    if backends._kernels is None:
        names = ["python"]
    else:
        names = ["compiled", "python"]
    print()
    print("end-to-end training benchmark (20 epochs, width 64, 2000 points)")
    for name in names:
        with tempfile.TemporaryDirectory() as tmp:
            config_path = os.path.join(tmp, "bench.cfg")
            with open(config_path, "w", encoding="utf-8") as handle:
                handle.write(TRAIN_CONFIG.format(out_dir=os.path.join(tmp, "out")))
            env = dict(os.environ, ALTTRAIN_BACKEND=name)
            start = time.perf_counter()
            proc = subprocess.run(
                [sys.executable, "-m", "alttrain.cli", "train",
                 "--config", config_path],
                capture_output=True, text=True, env=env,
                cwd=os.path.join(os.path.dirname(__file__), ".."),
            )
            elapsed = time.perf_counter() - start
            status = "ok" if proc.returncode == 0 else f"exit {proc.returncode}"
            print(f"  {name:>9}: {elapsed:6.1f} s  ({status})")
            if proc.returncode != 0:
                print(proc.stderr)


def main():
    print(f"active backend: {backends.backend_name()}")
    bench_kernels()
    bench_training()


if __name__ == "__main__":
    main()
