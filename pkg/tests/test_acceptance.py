"""End-to-end release gate.

One test per gate item, each printing a single ``[criterion N] PASS``
or ``FAIL`` line (run with ``pytest -s`` to see them as they happen).
Thresholds are asserted exactly as stated; nothing here is tuned to the
implementation.
"""

import filecmp
import shutil
import time

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

import oracles
from trackstab import (
    DisplacementField,
    FieldRecon,
    Frame,
    MotionSpec,
    RegistrationConfig,
    StationaryVelocity,
    VelocityField,
    central_crop,
    energy,
    exact_tracks,
    exp_map,
    generate,
    integrate_euler,
    jacobian_determinant,
    make_blob,
    make_phantom,
    mse,
    perturb_tracks,
    register_diffeo,
    sample_uniform_grid,
    save_motion_spec,
    ssim,
    tracks_to_displacement,
    warp,
)
from trackstab.cli import main
from trackstab.register import ssd_force

SIDE = 256
NUM_FRAMES = 30


def report(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def stabilize_with(seq, tracks, recon):
    out = [seq[0]]
    for t in range(1, len(seq)):
        field = tracks_to_displacement(tracks, t, recon, SIDE, SIDE)
        out.append(warp(seq[t], field))
    return out


@pytest.fixture(scope="module")
def rigid_case():
    # Sinusoidal drift normalized so the peak excursion is exactly
    # +-10 px per axis, plus a rotation ramp from 0 to exactly 3 deg.
    t = np.arange(NUM_FRAMES, dtype=np.float64)
    rx = np.sin(2.0 * np.pi * t / 17.0)
    ry = np.sin(2.0 * np.pi * t / 11.0)
    shifts = np.column_stack([
        10.0 * rx / np.abs(rx).max(),
        10.0 * ry / np.abs(ry).max(),
    ])
    angles = np.linspace(0.0, 3.0, NUM_FRAMES)
    center = ((SIDE - 1) / 2.0, (SIDE - 1) / 2.0)
    spec = MotionSpec.composite([
        MotionSpec.translation(shifts),
        MotionSpec.rotation(angles, center=center),
    ])
    base = make_phantom(SIDE, SIDE, seed=0)
    start = time.perf_counter()
    seq, _ = generate(base, spec, NUM_FRAMES)
    queries = sample_uniform_grid(SIDE, SIDE, 16)
    tracks = exact_tracks(spec, queries, NUM_FRAMES, SIDE, SIDE)
    stabilized = stabilize_with(seq, tracks, FieldRecon(method="grid-bilinear"))
    elapsed = time.perf_counter() - start
    return {
        "seq": seq,
        "tracks": tracks,
        "stabilized": stabilized,
        "elapsed": elapsed,
    }


def crop_scores(frames, reference, fraction=0.8):
    ref = central_crop(reference, fraction)
    pairs = [
        (ssim(central_crop(f, fraction), ref), mse(central_crop(f, fraction), ref))
        for f in frames[1:]
    ]
    return (np.mean([p[0] for p in pairs]), np.mean([p[1] for p in pairs]))


def test_c01_identity_warp_is_bit_exact():
    phantoms = [make_phantom(SIDE, SIDE, seed=s) for s in range(20)]
    ident = DisplacementField.identity(SIDE, SIDE)
    start = time.perf_counter()
    exact = all(
        np.array_equal(warp(f, ident).pixels, f.pixels) for f in phantoms
    )
    elapsed = time.perf_counter() - start
    report(
        1,
        exact and elapsed < 1.0,
        f"20 identity warps bit-exact={exact} in {elapsed:.3f}s (limit 1s)",
    )


def test_c02_rigid_sequence_recovered_from_grid_tracks(rigid_case):
    ssim_after, mse_after = crop_scores(rigid_case["stabilized"], rigid_case["seq"][0])
    ssim_before, _ = crop_scores(list(rigid_case["seq"]), rigid_case["seq"][0])
    elapsed = rigid_case["elapsed"]
    ok = (
        ssim_after >= 0.98
        and mse_after <= 5.0
        and ssim_before < ssim_after
        and elapsed < 10.0
    )
    report(
        2,
        ok,
        f"ssim {ssim_before:.5f} -> {ssim_after:.5f} (need >= 0.98 and improved), "
        f"mse {mse_after:.4f} (need <= 5), {elapsed:.2f}s (limit 10s)",
    )


def test_c03_denser_grids_do_not_hurt_deformation_recovery():
    amplitudes = np.linspace(0.0, 4.0, 8)
    spec = MotionSpec.smooth_deformation(amplitudes, frequency=0.5, phase=(0.7, 1.9))
    base = make_phantom(SIDE, SIDE, seed=1)
    seq, _ = generate(base, spec, 8)
    sizes = (4, 8, 16, 32, 64)
    means = []
    for g in sizes:
        tracks = exact_tracks(spec, sample_uniform_grid(SIDE, SIDE, g), 8, SIDE, SIDE)
        stabilized = stabilize_with(seq, tracks, FieldRecon(method="grid-bilinear"))
        means.append(float(np.mean([ssim(f, seq[0]) for f in stabilized[1:]])))
    spread = abs(means[0] - means[-1])
    steps_ok = all(b >= a - 0.01 for a, b in zip(means, means[1:]))
    ok = spread <= 0.05 and steps_ok
    report(
        3,
        ok,
        f"ssim by grid {dict(zip(sizes, [round(m, 5) for m in means]))}, "
        f"|g4 - g64| = {spread:.5f} (limit 0.05), monotone within 0.01: {steps_ok}",
    )


def test_c04_metrics_match_brute_force():
    rng = np.random.default_rng(42)
    worst_mse = 0.0
    worst_ssim = 0.0
    last = None
    for _ in range(10):
        a = Frame(rng.uniform(0.0, 255.0, (32, 32)))
        b = Frame(rng.uniform(0.0, 255.0, (32, 32)))
        worst_mse = max(worst_mse, abs(mse(a, b) - oracles.mse_loops(a.pixels, b.pixels)))
        worst_ssim = max(
            worst_ssim, abs(ssim(a, b) - oracles.ssim_loops(a.pixels, b.pixels))
        )
        last = a
    self_score = ssim(last, last)
    const = ssim(Frame(np.full((32, 32), 100.0)), Frame(np.full((32, 32), 110.0)))
    c1 = (0.01 * 255.0) ** 2
    closed_form = (2.0 * 100.0 * 110.0 + c1) / (100.0**2 + 110.0**2 + c1)
    ok = (
        worst_mse <= 1e-6
        and worst_ssim <= 1e-6
        and self_score == 1.0
        and abs(const - closed_form) < 5e-5
        and abs(const - 0.9954764440915066) < 1e-12
    )
    report(
        4,
        ok,
        f"max |mse - oracle| = {worst_mse:.2e}, max |ssim - oracle| = {worst_ssim:.2e} "
        f"(limit 1e-6), self-ssim = {self_score}, constant-pair {const:.6f} vs "
        f"closed form {closed_form:.6f}",
    )


def test_c05_registration_recovers_blob_translation():
    fixed = make_blob(128, 128)
    moving = make_blob(128, 128, offset=(2.0, 0.0))
    start = time.perf_counter()
    field, trace = register_diffeo(moving, fixed, RegistrationConfig())
    elapsed = time.perf_counter() - start
    dx, dy = field.displacement()
    support = fixed.pixels > 30.0
    mean_dx = float(dx[support].mean())
    mean_dy = float(dy[support].mean())
    before = mse(moving, fixed)
    after = mse(warp(moving, field), fixed)
    monotone = all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
    ok = (
        abs(mean_dx - 2.0) <= 0.5
        and abs(mean_dy - 0.0) <= 0.5
        and after <= 0.1 * before
        and monotone
        and elapsed < 30.0
    )
    report(
        5,
        ok,
        f"mean displacement in support ({mean_dx:+.3f}, {mean_dy:+.3f}) vs (2, 0) "
        f"tol 0.5, mse {before:.4f} -> {after:.4f} "
        f"({100.0 * (1.0 - after / before):.2f}% reduction, need >= 90%), "
        f"trace non-increasing: {monotone}, {elapsed:.2f}s (limit 30s)",
    )


def test_c06_euler_integration_translation_and_rotation():
    ones = np.ones((32, 32))
    step = VelocityField(ones, np.zeros_like(ones))
    dx, dy = integrate_euler([step, step, step]).displacement()
    const_err = max(np.abs(dx - 3.0).max(), np.abs(dy).max())

    omega = 0.01
    c = (SIDE - 1) / 2.0
    yy, xx = np.mgrid[0:SIDE, 0:SIDE].astype(np.float64)
    spin = VelocityField(-omega * (yy - c), omega * (xx - c))
    field = integrate_euler([spin] * 10)
    angle = 10.0 * omega
    exact_x = np.cos(angle) * (xx - c) - np.sin(angle) * (yy - c) + c
    exact_y = np.sin(angle) * (xx - c) + np.cos(angle) * (yy - c) + c
    err = np.hypot(field.map_x - exact_x, field.map_y - exact_y)
    interior = err[SIDE // 4 : 3 * SIDE // 4, SIDE // 4 : 3 * SIDE // 4].max()
    ok = const_err <= 1e-9 and interior < 0.05
    report(
        6,
        ok,
        f"constant (1,0) x3 error {const_err:.2e} (limit 1e-9), rotational "
        f"omega=0.01 x10 interior error {interior:.4f} px (limit 0.05)",
    )


def test_c07_exponential_map_stays_diffeomorphic():
    # Border-anchored like the synthetic deformation model, so the flow
    # stays inside the observed domain; squaring depth chosen per field
    # as the smallest K putting the scaled increment under 0.5 px.
    yy, xx = np.mgrid[0:64, 0:64].astype(np.float64)
    window = np.sin(np.pi * xx / 63.0) * np.sin(np.pi * yy / 63.0)
    worst = np.inf
    worst_inc = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        vx = gaussian_filter(rng.standard_normal((64, 64)), 8.0) * window
        vy = gaussian_filter(rng.standard_normal((64, 64)), 8.0) * window
        peak = max(np.abs(vx).max(), np.abs(vy).max())
        target = 1.0 + 5.0 * rng.random()
        vx *= target / peak
        vy *= target / peak
        squaring = max(1, int(np.ceil(np.log2(target / 0.45))))
        worst_inc = max(worst_inc, target * 2.0**-squaring)
        field = exp_map(StationaryVelocity(vx, vy), squaring)
        worst = min(worst, jacobian_determinant(field).min())
    ok = worst_inc < 0.5 and worst > 0.0
    report(
        7,
        ok,
        f"50 random smooth velocities, peaks 1-6 px, scaled increments "
        f"<= {worst_inc:.3f} px (< 0.5): min Jacobian determinant = {worst:.4f} "
        f"(need > 0)",
    )


def test_c08_ssd_force_matches_finite_differences():
    def smooth16(seed):
        rng = np.random.default_rng(seed)
        img = gaussian_filter(rng.uniform(0.0, 255.0, size=(16, 16)), 2.0)
        img = (img - img.min()) / (img.max() - img.min())
        return Frame(20.0 + img * 210.0)

    moving = smooth16(7)
    fixed = smooth16(8)
    cfg = RegistrationConfig()
    fx, fy = ssd_force(moving, fixed)
    scale = max(np.abs(fx).max(), np.abs(fy).max())
    step = 1e-3
    worst = 0.0
    for r in range(1, 15):
        for c in range(1, 15):
            for axis, force in ((0, fx), (1, fy)):
                dx = np.zeros((16, 16))
                dy = np.zeros((16, 16))
                (dx if axis == 0 else dy)[r, c] = step
                e_plus = energy(
                    moving, fixed, DisplacementField.from_displacement(dx, dy), cfg
                )
                (dx if axis == 0 else dy)[r, c] = -step
                e_minus = energy(
                    moving, fixed, DisplacementField.from_displacement(dx, dy), cfg
                )
                fd = (e_plus - e_minus) / (2.0 * step)
                worst = max(worst, abs(fd - force[r, c]) / scale)
    ok = worst <= 1e-4
    report(
        8,
        ok,
        f"max relative gap force vs central differences = {worst:.2e} (limit 1e-4)",
    )


def test_c09_idw_tolerates_noisy_tracks_with_outliers(rigid_case):
    noisy, outliers = perturb_tracks(
        rigid_case["tracks"], noise_sigma=0.5, outlier_rate=0.05, seed=7
    )
    stabilized = stabilize_with(rigid_case["seq"], noisy, FieldRecon(method="idw"))
    mean_ssim, _ = crop_scores(stabilized, rigid_case["seq"][0])
    ok = mean_ssim >= 0.95
    report(
        9,
        ok,
        f"ssim {mean_ssim:.5f} with jitter 0.5 px and {len(outliers)} outlier "
        f"tracks (need >= 0.95)",
    )


def test_c10_stabilize_command_is_byte_deterministic(tmp_path, monkeypatch):
    spec_path = tmp_path / "spec.json"
    save_motion_spec(
        MotionSpec.translation(
            np.array([[0.0, 0.0], [2.0, 0.0], [-1.0, 1.5], [0.5, -2.0]])
        ),
        spec_path,
    )
    synth = tmp_path / "synth"
    assert main([
        "synth", "--spec", str(spec_path), "--out", str(synth),
        "--size", "64", "--grid", "4",
    ]) == 0
    for sub in ("a", "b"):
        root = tmp_path / sub
        root.mkdir()
        shutil.copytree(synth / "frames", root / "frames")
        shutil.copy(synth / "tracks.json", root / "tracks.json")
        monkeypatch.chdir(root)
        assert main([
            "stabilize", "--frames", "frames", "--tracks", "tracks.json",
            "--out", "out", "--emit-fields",
        ]) == 0
    monkeypatch.chdir(tmp_path)
    out_a = tmp_path / "a" / "out"
    out_b = tmp_path / "b" / "out"
    rel_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
    rel_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
    same_names = rel_a == rel_b
    same_bytes = same_names and all(
        (out_a / rel).read_bytes() == (out_b / rel).read_bytes() for rel in rel_a
    )
    report(
        10,
        same_names and same_bytes,
        f"{len(rel_a)} files compared, identical names: {same_names}, "
        f"identical bytes: {same_bytes}",
    )
