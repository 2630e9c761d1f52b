import math

import numpy as np
import pytest

from optomech import (Cavity, CoolingConfig, LockConfig, MechMode, NestedModel,
                      effective_temperature, fringe_response, linewidth,
                      optical_damping_rate, simulate_lock, synth_brownian)

CAV = Cavity(0.05, 1.064e-6, 181000.0)
INNER = MechMode(250e3, 418000.0, 5e-11, 300.0)


def _lock_setup(q=30.0, m_eff=1e-6, temp=300.0):
    outer = MechMode(2.5e3, q, m_eff, temp)
    model = NestedModel(outer=outer, inner=INNER)
    lw = linewidth(CAV)
    cfg = LockConfig(kp=0.0, ki=1.28e-5, kd=0.0, actuator_range=1e-9,
                     loop_rate=10e6, detuning_bias=-lw / (2 * math.sqrt(3)))
    return model, cfg


class TestOpticalDamping:
    def setup_method(self):
        self.kappa = CAV.kappa
        self.w_m = 2 * np.pi * 2.5e3

    def test_zero_detuning_gives_zero(self):
        cfg = CoolingConfig(g0=2 * np.pi * 5.0, n_cav=1e8, detuning=0.0,
                            kappa=self.kappa)
        assert optical_damping_rate(cfg, self.w_m) == 0.0

    def test_antisymmetric_in_detuning(self):
        for d in (0.1, 0.5, 2.0):
            plus = CoolingConfig(2 * np.pi * 5.0, 1e8, d * self.kappa,
                                 self.kappa)
            minus = CoolingConfig(2 * np.pi * 5.0, 1e8, -d * self.kappa,
                                  self.kappa)
            assert optical_damping_rate(plus, self.w_m) == pytest.approx(
                -optical_damping_rate(minus, self.w_m), rel=1e-12)

    def test_resolved_sideband_limit(self):
        w_m = 2 * np.pi * 250e3
        kappa = w_m / 100.0
        g0, n = 2 * np.pi * 2.0, 1e6
        cfg = CoolingConfig(g0, n, -w_m, kappa)
        assert optical_damping_rate(cfg, w_m) == pytest.approx(
            4 * g0 ** 2 * n / kappa, rel=1e-4)

    def test_red_detuning_cools(self):
        cfg = CoolingConfig(2 * np.pi * 5.0, 1e8, -0.5 * self.kappa,
                            self.kappa)
        assert optical_damping_rate(cfg, self.w_m) > 0.0

    def test_continuity_near_zero(self):
        g = [optical_damping_rate(
            CoolingConfig(2 * np.pi * 5.0, 1e8, d, self.kappa), self.w_m)
            for d in (-1e-3, 0.0, 1e-3)]
        assert abs(g[0]) < 1e-6 * abs(optical_damping_rate(
            CoolingConfig(2 * np.pi * 5.0, 1e8, -self.kappa / 2, self.kappa),
            self.w_m))
        assert g[1] == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            CoolingConfig(1.0, -1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            CoolingConfig(1.0, 1.0, 0.0, 0.0)
        cfg = CoolingConfig(1.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            optical_damping_rate(cfg, 0.0)


class TestEffectiveTemperature:
    def test_no_damping_is_bath_temperature(self):
        m = MechMode(2.5e3, 1e5, 1e-7, 300.0)
        assert effective_temperature(m, 0.0) == 300.0

    def test_nine_gamma_gives_tenth(self):
        m = MechMode(2.5e3, 1e5, 1e-7, 300.0)
        assert effective_temperature(m, 9 * m.gamma) == pytest.approx(
            30.0, rel=1e-12)

    def test_monotone_and_nonnegative(self):
        m = MechMode(2.5e3, 1e5, 1e-7, 300.0)
        gammas = np.linspace(-0.9 * m.gamma, 100 * m.gamma, 50)
        temps = [effective_temperature(m, g) for g in gammas]
        assert all(a > b for a, b in zip(temps, temps[1:]))
        assert all(t >= 0 for t in temps)

    def test_instability_raises(self):
        m = MechMode(2.5e3, 1e5, 1e-7, 300.0)
        with pytest.raises(ValueError):
            effective_temperature(m, -m.gamma)

    def test_red_detuned_lock_cools_outer_mode(self):
        outer = MechMode(2.5e3, 1e5, 1e-7, 300.0)
        cfg = CoolingConfig(g0=2 * np.pi * 5.0, n_cav=1e8,
                            detuning=-CAV.kappa / 2, kappa=CAV.kappa)
        g_opt = optical_damping_rate(cfg, outer.omega0)
        assert g_opt > 0
        assert effective_temperature(outer, g_opt) < outer.temp


class TestSimulateLock:
    def test_zero_thermal_motion_trivially_locked(self):
        model, cfg = _lock_setup(temp=0.0)
        res = simulate_lock(model, CAV, cfg, 0.005, seed=3)
        assert res.lock_acquired
        assert res.closed_loop_error_rms == 0.0

    def test_zero_gain_equals_open_loop_synthesis(self):
        model, _ = _lock_setup()
        lw = linewidth(CAV)
        bias = -lw / (2 * math.sqrt(3))
        cfg = LockConfig(kp=0.0, ki=0.0, kd=0.0, actuator_range=1e-9,
                         loop_rate=10e6, detuning_bias=bias)
        res = simulate_lock(model, CAV, cfg, 0.005, seed=5,
                            start_locked=False)
        motion = synth_brownian(model.outer, 10e6, 0.005, 5)
        det = bias + (2 * CAV.fsr / CAV.wavelength) * motion.values
        expected = fringe_response(det, CAV) - fringe_response(bias, CAV)
        assert np.array_equal(res.error_signal.values, expected)

    def test_deterministic_per_seed(self):
        model, cfg = _lock_setup()
        a = simulate_lock(model, CAV, cfg, 0.004, seed=11)
        b = simulate_lock(model, CAV, cfg, 0.004, seed=11)
        assert np.array_equal(a.error_signal.values, b.error_signal.values)
        assert np.array_equal(a.actuator.values, b.actuator.values)

    def test_acquires_and_linearises(self):
        model, cfg = _lock_setup()
        lw = linewidth(CAV)
        res = simulate_lock(model, CAV, cfg, 0.02, seed=23)
        assert res.lock_acquired
        assert res.closed_loop_error_rms <= 0.1 * res.open_loop_error_rms
        assert res.open_loop_detuning_rms > lw / 2
        assert res.closed_loop_detuning_rms < lw / 20

    def test_saturation_reported(self):
        model, cfg0 = _lock_setup()
        cfg = LockConfig(kp=cfg0.kp, ki=cfg0.ki, kd=cfg0.kd,
                         actuator_range=1e-13, loop_rate=cfg0.loop_rate,
                         detuning_bias=cfg0.detuning_bias)
        res = simulate_lock(model, CAV, cfg, 0.004, seed=23)
        assert res.saturation_fraction > 0.01
        assert not res.lock_acquired

    def test_loop_rate_precondition(self):
        model, cfg0 = _lock_setup()
        cfg = LockConfig(ki=cfg0.ki, loop_rate=10e3,
                         detuning_bias=cfg0.detuning_bias)
        with pytest.raises(ValueError):
            simulate_lock(model, CAV, cfg, 0.01, seed=0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LockConfig(loop_rate=0.0)
        with pytest.raises(ValueError):
            LockConfig(actuator_range=0.0)
