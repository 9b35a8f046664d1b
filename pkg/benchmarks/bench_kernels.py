"""Timing of the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--nodes 201,801,3201] [--repeat 200]
"""

import argparse
import math
import timeit

import numpy as np

from llgbubble import kernels
from llgbubble.initialdata import gamma_family, theta_linear
from llgbubble.mesh import RadialMesh


def cases(n):
    mesh = RadialMesh(np.linspace(0.0, 1.0, n) ** 1.5)
    r = mesh.nodes
    m = np.ascontiguousarray(gamma_family(mesh, 0.4).m)
    th = np.ascontiguousarray(theta_linear(mesh).theta)
    a, b = 1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)
    return {
        "llg_rhs": lambda k: k.llg_rhs(r, m, a, b, 1.0),
        "llg_jac": lambda k: k.llg_jac(r, m, a, b, 1.0),
        "radial_rhs": lambda k: k.radial_rhs(r, th),
        "radial_jac": lambda k: k.radial_jac(r, th),
        "gradient": lambda k: k.gradient(r, m, (-1.0, -1.0, 1.0)),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", default="201,801,3201")
    p.add_argument("--repeat", type=int, default=200)
    args = p.parse_args(argv)
    nb, npy = kernels.backend(True), kernels.backend(False)
    print(f"{'kernel':<12}{'N':>7}{'numpy [us]':>13}{'numba [us]':>13}{'speedup':>10}{'max diff':>12}")
    for n in (int(x) for x in args.nodes.split(",")):
        for name, call in cases(n).items():
            ref, out = call(npy), call(nb)  # also triggers compilation
            diff = float(np.max(np.abs(np.asarray(ref) - np.asarray(out))))
            t_np = min(timeit.repeat(lambda: call(npy), number=args.repeat, repeat=3)) / args.repeat
            t_nb = min(timeit.repeat(lambda: call(nb), number=args.repeat, repeat=3)) / args.repeat
            print(f"{name:<12}{n:>7}{t_np * 1e6:>13.1f}{t_nb * 1e6:>13.1f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
