"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criterion 6 is long-running (dense 4506 x 8192 Gaussian matrices, 100
trials) and carries the ``slow`` marker; it still runs by default.
"""

import itertools

import numpy as np
import pytest

from conftest import crandn
from oracles import (bg_posterior_quad, dense_lmmse, dense_z_lmmse, dft_matrix, mmse_monte_carlo,
                     selection_matrix)
from test_null_feedback import standard_turbo_mse, x_domain_extrinsic
from turbocs.denoiser import BgPrior, bg_denoise, mmse_of_snr
from turbocs.harness import ExperimentSpec, iterations_to_converge, run_experiment
from turbocs.model import GaussianMessage, SystemConfig, dft, idft, sample_instance
from turbocs.state_evolution import fixed_point_residual, replica_solution, se_run
from turbocs.turbo import TurboState, extrinsic_combine, module_a, run_turbo


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return emit


def db(x):
    return 10 * np.log10(x)


def test_criterion_1_se_tracks_simulation(report):
    cfg = SystemConfig(4096, 2867, 0.4, 50.0, base_seed=0)
    res = run_experiment(ExperimentSpec(cfg, "turbo", trials=200))
    sim, err, se = res.per_iteration_mse, res.per_iteration_stderr, res.se_prediction
    gap = np.abs(db(sim) - db(se))
    overlap = np.abs(sim - se) <= err
    ok = res.metadata["excluded_trials"] == 0 and gap.max() <= 0.5 and overlap.all()
    bad = [int(i) + 1 for i in np.nonzero(~overlap)[0]]
    report(1, ok, f"{len(sim)} iterations, max |dB gap| = {gap.max():.3f} (<= 0.5), "
                  f"error bars miss SE at iterations {bad}, "
                  f"max |sim - se| / stderr = {np.max(np.abs(sim - se) / err):.2f}")


def test_criterion_2_fixed_point_grid(report):
    worst_agree, worst_res = 0.0, 0.0
    for ratio, lam, snr in itertools.product([0.4, 0.55, 0.7, 1.0], [0.2, 0.4, 0.8], [20.0, 50.0]):
        cfg = SystemConfig(4096, int(round(ratio * 4096)), lam, snr)
        traj = se_run(cfg)
        assert traj.converged
        eta_se, eta_rep = traj.fixed_point_eta, replica_solution(cfg)
        worst_agree = max(worst_agree, abs(eta_se - eta_rep) / eta_rep)
        worst_res = max(worst_res, abs(fixed_point_residual(eta_se, cfg)),
                        abs(fixed_point_residual(eta_rep, cfg)))
    ok = worst_agree < 1e-8 and worst_res < 1e-8
    report(2, ok, f"24 grid points, max relative eta gap {worst_agree:.2e}, "
                  f"max |residual| {worst_res:.2e} (both < 1e-8)")


def test_criterion_3_denoiser_oracles(report):
    worst = 0.0
    for lam, v, mag in itertools.product([0.1, 0.4, 0.9], [1e-4, 1e-2, 1.0], [0.0, 0.5, 1.0, 3.0]):
        r = mag * np.exp(0.7j)
        mean, var = bg_denoise(r, v, BgPrior(lam))
        q_mean, q_var = bg_posterior_quad(r, v, lam)
        worst = max(worst, abs(mean - q_mean), abs(var - q_var))
    zs = []
    for i, eta in enumerate([1.0, 10.0, 100.0, 1e5]):
        mc, se = mmse_monte_carlo(eta, 0.4, 10_000_000, np.random.default_rng(300 + i))
        zs.append(abs(mmse_of_snr(eta, BgPrior(0.4)) - mc) / se)
    ok = worst < 1e-8 and max(zs) < 3
    report(3, ok, f"quadrature grid max error {worst:.2e} (< 1e-8); "
                  f"Monte Carlo |z| = {', '.join(f'{z:.2f}' for z in zs)} (< 3)")


def test_criterion_4_dense_lmmse(report):
    n, m = 64, 32
    cfg = SystemConfig(n, m, 0.4, 20.0, base_seed=3)
    inst = sample_instance(cfg, 0)
    rng = np.random.default_rng(4)
    F, S = dft_matrix(n), selection_matrix(inst.selection.indices, n)
    z_pri, v_pri = 0.3 * crandn(rng, n), 0.7

    x_pri = F.conj().T @ z_pri
    x_post, cov = dense_lmmse(inst.y, S @ F, x_pri, v_pri, cfg.noise_var)
    v_post = np.diag(cov).real.mean()
    v_ext = 1.0 / (1.0 / v_post - 1.0 / v_pri)
    want = v_ext * (x_post / v_post - x_pri / v_pri)
    got = module_a(TurboState(GaussianMessage(z_pri, v_pri)), inst, cfg)
    mean_err = np.abs(got.mean - want).max() / np.abs(want).max()
    var_err = abs(got.variance - v_ext) / v_ext

    _, V = dense_z_lmmse(inst.y, S, z_pri, v_pri, cfg.noise_var)
    diag = np.diag(F.conj().T @ V @ F).real
    v_closed = v_pri - (m / n) * v_pri ** 2 / (v_pri + cfg.noise_var)
    diag_err = np.abs(diag - v_closed).max()
    ok = mean_err < 1e-10 and var_err < 1e-10 and diag_err < 1e-12 and np.ptp(diag) < 1e-12
    report(4, ok, f"module A mean err {mean_err:.2e}, variance err {var_err:.2e} (< 1e-10); "
                  f"posterior diagonal spread {np.ptp(diag):.2e}, err {diag_err:.2e} (< 1e-12)")


def test_criterion_5_gaussian_prior_joint_lmmse(report):
    n = 64
    cfg = SystemConfig(n, 32, 1.0, 20.0, base_seed=5)
    inst = sample_instance(cfg, 0)
    A = selection_matrix(inst.selection.indices, n) @ dft_matrix(n)
    x_lmmse, _ = dense_lmmse(inst.y, A, np.zeros(n), 1.0, cfg.noise_var)
    res = run_turbo(inst, cfg)
    mse_turbo = np.mean(np.abs(res.x_hat - inst.x) ** 2)
    mse_lmmse = np.mean(np.abs(x_lmmse - inst.x) ** 2)
    gap = abs(mse_turbo - mse_lmmse)
    ok = res.converged and gap < 1e-8
    report(5, ok, f"turbo MSE {mse_turbo:.6e}, joint LMMSE MSE {mse_lmmse:.6e}, gap {gap:.2e} (< 1e-8)")


@pytest.mark.slow
def test_criterion_6_turbo_beats_amp(report):
    cfg = SystemConfig(8192, 4506, 0.4, 50.0, base_seed=0)
    out = {a: run_experiment(ExperimentSpec(cfg, a, trials=100, max_iters=200))
           for a in ("turbo", "amp_dft", "amp_gauss")}
    final = {a: r.final_mse for a, r in out.items()}
    iters = {a: iterations_to_converge(r.per_iteration_mse) for a, r in out.items()}
    excluded = sum(r.metadata["excluded_trials"] for r in out.values())
    ok = excluded == 0 and final["turbo"] < final["amp_dft"] and iters["turbo"] < iters["amp_gauss"]
    report(6, ok, "final MSE dB " + ", ".join(f"{a} {db(v):.2f}" for a, v in final.items())
           + "; iterations to converge " + ", ".join(f"{a} {v}" for a, v in iters.items()))


def recombine(m1, v1, m2, v2):
    v = 1.0 / (1.0 / v1 + 1.0 / v2)
    return v * (m1 / v1 + m2 / v2), v


def test_criterion_7_message_algebra(report):
    rng = np.random.default_rng(7)
    worst_v, worst_m = 0.0, 0.0
    for _ in range(10_000):
        v_pri = 10.0 ** rng.uniform(-6, 6)
        frac = rng.uniform(0.01, 0.99)
        v_post = frac * v_pri
        post, pri = crandn(rng), crandn(rng)
        ext = extrinsic_combine(post, v_post, pri, v_pri)
        mean, var = recombine(ext.mean, ext.variance, pri, v_pri)
        # the subtraction of precisions amplifies rounding by v_pri / (v_pri - v_post)
        cond = 1.0 / (1.0 - frac)
        worst_v = max(worst_v, abs(var - v_post) / v_post / cond)
        worst_m = max(worst_m, abs(mean - post) / (abs(post) + abs(pri)) / cond)
    worst_u = 0.0
    for k in range(1000):
        n = int(rng.integers(1, 4097))
        v = crandn(rng, n)
        nv = np.linalg.norm(v)
        worst_u = max(worst_u, abs(np.linalg.norm(dft(v)) - nv) / nv,
                      abs(np.linalg.norm(idft(v)) - nv) / nv,
                      np.linalg.norm(idft(dft(v)) - v) / nv)
    ok = worst_v < 1e-12 and worst_m < 1e-12 and worst_u < 1e-12
    report(7, ok, f"recombination rel. error / conditioning: variance {worst_v:.1e}, mean {worst_m:.1e}; "
                  f"unitarity and Parseval worst {worst_u:.1e} (all < 1e-12)")


def test_criterion_8_null_feedback(report):
    zero = all(np.all(x_domain_extrinsic(GaussianMessage(np.ones(8) + 1j, v), BgPrior(lam)).mean == 0)
               for lam in (0.1, 0.4, 1.0) for v in (1e-4, 0.1, 3.0))
    cfg = SystemConfig(256, 180, 0.4, 30.0, base_seed=2)
    mse = standard_turbo_mse(sample_instance(cfg, 0), cfg, 10)
    flat = bool(np.all(mse[1:] == mse[0]))
    ok = zero and BgPrior(0.4).mean == 0 and flat
    report(8, ok, f"x-domain extrinsic mean identically zero: {zero}; "
                  f"degenerate loop MSE {db(mse[0]):.2f} dB at every one of {len(mse)} iterations: {flat}")
