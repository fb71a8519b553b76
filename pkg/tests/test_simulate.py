import math

import numpy as np
import pytest

from starparticles.errors import DomainError
from starparticles.kernels import Kernel, kernel_constants
from starparticles.levy_basis import LevyBasisSpec, sample_basis
from starparticles.partition import partition_circle, partition_sphere
from starparticles.simulate import (
    ParticleSpec,
    SimulationConfig,
    build_grid_circle,
    build_grid_sphere,
    default_clamp,
    kernel_block,
    resolution_scale,
    simulate_ensemble,
    simulate_field,
    simulate_field_circle,
)


def test_sphere_grid_layout():
    dirs, th, ph = build_grid_sphere(3, 4)
    assert dirs.shape == (12, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    # row m = i M2 + j - 1 with theta = i pi / M1, phi = 2 pi j / M2
    assert th[5] == pytest.approx(math.pi / 3) and ph[5] == pytest.approx(math.pi)
    assert np.allclose(dirs[:4], [0, 0, 1])
    assert ph[3] == pytest.approx(2 * math.pi)


def test_circle_grid_layout():
    dirs, ph = build_grid_circle(4)
    assert np.allclose(ph, [math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi])
    assert np.allclose(dirs[1], [-1, 0])


def test_config_validation():
    with pytest.raises(DomainError):
        SimulationConfig(M1=0)
    with pytest.raises(DomainError):
        SimulationConfig(M1=2, clamp_delta=-1.0)
    with pytest.raises(DomainError):
        ParticleSpec(Kernel("vmf", 1.0), LevyBasisSpec.gaussian(0, 1), truncation_c=-1.0)


def _brute_force(spec, config, clamp=0.0):
    p = partition_sphere(config.N) if spec.domain == "sphere" else partition_circle(config.N)
    L = sample_basis(spec.basis, p.areas(), config.seed)
    if spec.domain == "sphere":
        dirs, _, _ = build_grid_sphere(config.M1, config.M2)
    else:
        dirs, _ = build_grid_circle(config.M1)
    c = p.centers
    out = []
    for u in dirs:
        ang = np.arccos(np.clip(c @ u, -1, 1))
        out.append(np.sum(spec.kernel(np.maximum(ang, clamp) if spec.kernel.family == "power" else ang) * L))
    return np.array(out)


@pytest.mark.parametrize("kernel", [Kernel("vmf", 3.0), Kernel("uniform", 0.7), Kernel("vmf", 2.0, "circle")])
def test_field_matches_brute_force_sum(kernel):
    spec = ParticleSpec(kernel, LevyBasisSpec.gaussian(1.0, 0.5))
    cfg = SimulationConfig(M1=6, M2=5, N=300, seed=4)
    f = simulate_field(spec, cfg)
    assert np.allclose(f.values, _brute_force(spec, cfg), rtol=1e-12, atol=1e-12)


def test_power_field_matches_brute_force_with_clamp():
    spec = ParticleSpec(Kernel("power", 0.4), LevyBasisSpec.gamma(2.0, 1.0))
    cfg = SimulationConfig(M1=5, M2=6, N=500, seed=1, clamp_delta=0.02)
    f = simulate_field(spec, cfg)
    assert f.config.clamp_delta == 0.02
    assert np.allclose(f.values, _brute_force(spec, cfg, 0.02), rtol=1e-12)


def test_small_variance_limit_is_the_mean():
    # sigma2 -> 0 leaves mu * sum_n k(angle) a_n, a Riemann sum for mu c1
    k = Kernel("vmf", 2.0)
    spec = ParticleSpec(k, LevyBasisSpec.gaussian(0.5, 1e-20))
    f = simulate_field(spec, SimulationConfig(M1=10, M2=12, N=20_000, seed=0))
    assert np.allclose(f.values, 0.5 * kernel_constants(k).c1, rtol=1e-3)


def test_truncation():
    k = Kernel("vmf", 1.0)
    basis = LevyBasisSpec.gaussian(10.0, 1.0)
    cfg = SimulationConfig(M1=10, M2=10, N=1000, seed=3)
    a = simulate_field(ParticleSpec(k, basis), cfg).values
    c = float(np.median(a))
    b = simulate_field(ParticleSpec(k, basis, truncation_c=c), cfg).values
    assert np.array_equal(b, np.maximum(a, c))
    assert b.min() == c


def test_determinism_and_threads():
    spec = ParticleSpec(Kernel("power", 0.5), LevyBasisSpec.gaussian(1.0, 1.0))
    cfg = SimulationConfig(M1=20, M2=40, N=10_000, seed=9)
    a = simulate_field(spec, cfg).values
    assert np.array_equal(a, simulate_field(spec, cfg).values)
    assert np.array_equal(a, simulate_field(spec, cfg, threads=3).values)
    other = simulate_field(spec, SimulationConfig(M1=20, M2=40, N=10_000, seed=10)).values
    assert not np.array_equal(a, other)


def test_ensemble_matches_single_runs():
    spec = ParticleSpec(Kernel("vmf", 4.0), LevyBasisSpec.gamma(3.0, 2.0))
    cfg = SimulationConfig(M1=8, M2=8, N=2000, seed=0)
    fields = simulate_ensemble(spec, cfg, [5, 6, 7])
    for f in fields:
        single = simulate_field(spec, SimulationConfig(M1=8, M2=8, N=2000, seed=f.config.seed))
        assert np.allclose(f.values, single.values, rtol=1e-12)
    assert simulate_ensemble(spec, cfg, []) == []


def test_isotropy_of_moments():
    # mean and variance do not depend on direction (up to discretisation and sampling error)
    k = Kernel("vmf", 5.0)
    spec = ParticleSpec(k, LevyBasisSpec.gaussian(1.0, 1.0))
    cfg = SimulationConfig(M1=4, M2=4, N=4000)
    vals = np.stack([f.values for f in simulate_ensemble(spec, cfg, range(300))])
    c = kernel_constants(k)
    se_mean = math.sqrt(c.c2 / 300)
    assert np.all(np.abs(vals.mean(0) - c.c1) < 5 * se_mean)
    assert np.all(np.abs(vals.var(0, ddof=1) / c.c2 - 1) < 5 * math.sqrt(2 / 299))


def test_circle_field():
    spec = ParticleSpec(Kernel("uniform", 0.5, "circle"), LevyBasisSpec.gaussian(2.0, 1.0))
    f = simulate_field_circle(spec, SimulationConfig(M1=64, N=512, seed=1))
    assert f.domain == "circle" and f.values.shape == (64,)
    assert np.allclose(f.thetas, math.pi / 2)
    with pytest.raises(DomainError):
        simulate_field_circle(ParticleSpec(Kernel("vmf", 1.0), LevyBasisSpec.gaussian(0, 1)),
                              SimulationConfig(M1=4))


def test_circle_uniform_mean():
    k = Kernel("uniform", 0.5, "circle")
    spec = ParticleSpec(k, LevyBasisSpec.gaussian(2.0, 1e-20))
    f = simulate_field(spec, SimulationConfig(M1=16, N=1024))
    # each grid point sees exactly 2r of arc, half-weight boundary cells included
    assert np.allclose(f.values, 2.0 * kernel_constants(k).c1, rtol=1e-2)


def test_kernel_block_uniform_tie_counts_half():
    k = Kernel("uniform", math.pi / 2)
    u = np.array([[0.0, 0.0, 1.0]])
    v = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    assert list(kernel_block(k, u, v)[0]) == [0.5, 1.0, 0.0]


def test_kernel_block_power_clamp():
    k = Kernel("power", 0.5)
    u = np.array([[0.0, 0.0, 1.0]])
    kb = kernel_block(k, u, u, clamp=math.pi / 4)
    assert kb[0, 0] == pytest.approx(1.0)


def test_default_clamp():
    spec = ParticleSpec(Kernel("power", 0.5), LevyBasisSpec.gaussian(0.0, 1.0))
    d = default_clamp(spec, 10_000)
    assert 0 < d <= resolution_scale("sphere", 10_000)
    smooth = ParticleSpec(Kernel("vmf", 1.0), LevyBasisSpec.gaussian(0.0, 1.0))
    assert default_clamp(smooth, 10_000) == 0.0


def test_field_csv():
    spec = ParticleSpec(Kernel("vmf", 1.0), LevyBasisSpec.gaussian(0.0, 1.0))
    f = simulate_field(spec, SimulationConfig(M1=2, M2=2, N=10))
    lines = f.to_csv().splitlines()
    assert lines[0] == "theta,phi,x" and len(lines) == 5
