"""Smoke test for the Python extension.

Build the extension first:

    cargo build --release -p phasenoise-py --features extension-module

The script picks up ``target/release/libphasenoise.so`` and imports it as
``phasenoise`` unless a ``phasenoise`` module is already importable.
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    try:
        import phasenoise  # noqa: F401

        return phasenoise
    except ImportError:
        pass
    for name in ("libphasenoise.so", "libphasenoise.dylib", "phasenoise.dll"):
        built = ROOT / "target" / "release" / name
        if built.exists():
            break
    else:
        sys.exit("extension not built; run: cargo build --release -p phasenoise-py --features extension-module")
    tmp = pathlib.Path(tempfile.mkdtemp())
    target = tmp / ("phasenoise.pyd" if built.suffix == ".dll" else "phasenoise.so")
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("phasenoise", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    pn = load_module()
    sigma = math.radians(6.0)

    gap = pn.avg_peak_gap(1)
    assert abs(gap - 1.4190) < 1e-3, gap

    lo, hi = pn.nonunitary_asymptotic_bounds(2, sigma, 0.5, 2.0, 1e3)
    assert abs((hi - lo) - 1.5 * math.log(4.0)) < 1e-9

    a = pn.asymptotic_capacity(1, sigma, 10 ** 1.6, unit="nats")
    assert abs(a - 3.445) < 1e-3, a

    assert abs(pn.los_antenna_spacing(80.0, 500.0, 2) - 0.9679) < 1e-4

    lmin, lmax = pn.singular_value_bounds([[1 + 0j, 0j], [0j, 2 + 0j]])
    assert abs(lmin - 1.0) < 1e-12 and abs(lmax - 4.0) < 1e-12

    params = pn.ChannelParams(1, sigma, 100.0)
    assert params.is_unitary()
    ys, phases = params.simulate([[1 + 0j]] * 10, seed=3, initial_phase=0.0, noiseless=True)
    assert len(ys) == 10 and abs(phases[0]) < 1e-12
    assert all(abs(abs(y[0]) - 1.0) < 1e-12 for y in ys)

    try:
        params.simulate([[20 + 0j]], seed=1)
    except ValueError as e:
        assert "input 0" in str(e)
    else:
        raise AssertionError("peak constraint was not enforced")

    qam = pn.Constellation("QAM-16")
    assert len(qam) == 16
    peak = max(abs(s) for s in qam.normalized(100.0, 1).symbols)
    assert abs(peak - 10.0) < 1e-9

    us = pn.upper_bound_us(params, seed=2, n_samples=5000)
    rate = pn.qam_lower(params, qam, seed=2, q_levels=64, block_length=300, n_blocks=2)
    assert 0.0 < rate.value_bits <= us.value_bits + 3 * (rate.std_error_bits + us.std_error_bits)
    assert us.kind == "U_s" and us.opt_alpha > 0

    print(f"U_s(20 dB) = {us.value_bits:.4f} bits, 16-QAM = {rate.value_bits:.4f} bits")
    print("smoke test passed")


if __name__ == "__main__":
    main()
