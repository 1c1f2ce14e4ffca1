import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hotadc.errors import ConfigurationError
from hotadc.modulator import ModulatorConfig
from hotadc.thermal import (EM_RULES, AnalogParams, EmRule, Environment, LeakageParams,
                            NonidealitySet, boost_factor, build_nonidealities, channel_leakage,
                            chip_draws, compensated_leakage, em_check, input_pair_residual,
                            junction_leakage, ktc_sigma, subthreshold_swing)

CFG = ModulatorConfig()
P = LeakageParams()

leakage_params = st.builds(
    LeakageParams,
    i_ref=st.floats(1e-18, 1e-9), t_ref=st.floats(0.0, 50.0), t_double=st.floats(8.0, 20.0),
    i0_ch=st.floats(1e-10, 1e-5), n_sub=st.floats(1.0, 2.0),
    v_th0=st.floats(0.3, 0.8), tc_vth=st.floats(1e-4, 2e-3))
temperature = st.floats(-55.0, 350.0)


# ---------------------------------------------------------------- junction leakage

def test_junction_leakage_reference_and_doubling():
    assert junction_leakage(P.t_ref, P) == pytest.approx(P.i_ref)
    assert junction_leakage(P.t_ref + P.t_double, P) == pytest.approx(2 * P.i_ref)


def test_junction_leakage_span_exceeds_four_decades():
    assert math.log10(junction_leakage(250.0) / junction_leakage(25.0)) >= 4.0


@given(p=leakage_params, t=temperature, dt=st.floats(0.01, 50.0))
def test_leakages_strictly_increase_with_temperature(p, t, dt):
    t2 = min(t + dt, 350.0)
    if t2 <= t:
        return
    assert junction_leakage(t2, p) > junction_leakage(t, p)
    assert channel_leakage(0.0, t2, p) > channel_leakage(0.0, t, p)
    assert channel_leakage(-0.2, t2, p) > channel_leakage(-0.2, t, p)


# ---------------------------------------------------------------- compensation

def test_compensated_leakage_examples():
    assert compensated_leakage(1e-9, 0.0) == 0.0
    assert compensated_leakage(1e-9, 0.01) == pytest.approx(10e-12)


def test_input_pair_residual_examples():
    assert input_pair_residual(1e-9, 0.0) == 0.0
    assert input_pair_residual(1e-9, 0.02) == pytest.approx(80e-12)
    ratio = input_pair_residual(1e-9, 0.01) / compensated_leakage(1e-9, 0.01)
    assert ratio == pytest.approx(4.0)


@given(delta=st.floats(-1e-4, 1e-4).filter(lambda d: d != 0), t=temperature)
def test_compensation_improves_by_four_decades(delta, t):
    i = junction_leakage(t)
    assert math.log10(i / abs(compensated_leakage(i, delta))) >= 4.0


def test_mismatch_draws_are_unbiased():
    n = 4000
    env = Environment(sigma_mismatch=1e-3)
    deltas = np.array([chip_draws(replace(env, chip=c)).delta_junction for c in range(n)])
    assert abs(deltas.mean()) < 4 * 1e-3 / math.sqrt(n)
    assert deltas.std() == pytest.approx(1e-3, rel=0.05)


def test_chip_draws_depend_on_chip_not_temperature():
    a = chip_draws(Environment(chip=1, temperature=25.0))
    b = chip_draws(Environment(chip=1, temperature=250.0))
    c = chip_draws(Environment(chip=2))
    assert a == b and a != c


# ---------------------------------------------------------------- channel leakage

# n * k * T / q * ln 10 evaluated by hand with CODATA k and q
@pytest.mark.parametrize("t, n, expected_mv", [(26.85, 1.0, 59.53), (26.85, 1.4, 83.34),
                                               (250.0, 1.4, 145.33)])
def test_subthreshold_swing_examples(t, n, expected_mv):
    assert subthreshold_swing(t, n) * 1e3 == pytest.approx(expected_mv, abs=0.01)


def test_boost_factor_examples():
    assert boost_factor(0.0, 250.0) == 1.0
    full = boost_factor(0.2, 250.0)
    assert full == pytest.approx(23.8, abs=0.1)
    assert full > 20
    assert boost_factor(0.1, 250.0) == pytest.approx(math.sqrt(full))


@given(p=leakage_params, t=temperature, vb=st.floats(0.0, 0.3))
def test_boost_factor_identity(p, t, vb):
    ratio = channel_leakage(0.0, t, p) / channel_leakage(-vb, t, p)
    expected = 10 ** (vb / subthreshold_swing(t, p.n_sub))
    assert ratio == pytest.approx(expected, rel=1e-9)
    assert boost_factor(vb, t, p) == pytest.approx(expected, rel=1e-9)


@given(p=leakage_params, t=temperature, v=st.floats(-0.3, 0.3), dv=st.floats(1e-3, 0.1))
def test_channel_leakage_increases_with_gate_drive(p, t, v, dv):
    assert channel_leakage(v + dv, t, p) > channel_leakage(v, t, p)


# ---------------------------------------------------------------- kT/C

def test_ktc_examples():
    assert ktc_sigma(26.85, 1e-12) * 1e6 == pytest.approx(64.4, abs=0.05)
    assert ktc_sigma(249.85, 1e-12) * 1e6 == pytest.approx(85.0, abs=0.05)
    assert ktc_sigma(100.0, 4e-12) == pytest.approx(ktc_sigma(100.0, 1e-12) / 2)


# ---------------------------------------------------------------- electromigration

def test_em_examples():
    top = em_check(1e-6, 0.8, EM_RULES["top"])
    assert top.density == pytest.approx(1.25)
    assert top.margin == pytest.approx(60.0) and top.passed
    internal = em_check(4e-6, 0.8, EM_RULES["internal"])
    assert internal.margin == pytest.approx(9.0) and not internal.passed
    zero = em_check(0.0, 0.8)
    assert zero.margin == math.inf and zero.passed


def test_em_rejects_bad_width_and_rule():
    with pytest.raises(ConfigurationError):
        em_check(1e-6, 0.0)
    with pytest.raises(ConfigurationError):
        EmRule(threshold=-1.0)
    assert EM_RULES["internal"].threshold == 45 and EM_RULES["top"].threshold == 75
    assert all(r.margin_required == 10 for r in EM_RULES.values())


# ---------------------------------------------------------------- environment

@pytest.mark.parametrize("kwargs", [dict(temperature=-60.0), dict(temperature=351.0),
                                    dict(v_boost=0.35), dict(v_boost=-0.1),
                                    dict(sigma_mismatch=-1.0), dict(n_chips=0)])
def test_environment_validation(kwargs):
    with pytest.raises(ConfigurationError):
        Environment(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(n_sub=0.9), dict(n_sub=2.1), dict(i_ref=0.0),
                                    dict(t_double=-1.0)])
def test_leakage_param_validation(kwargs):
    with pytest.raises(ConfigurationError):
        LeakageParams(**kwargs)


# ---------------------------------------------------------------- composition

def test_ideal_mode_is_all_zero():
    nid = build_nonidealities(CFG, Environment(temperature=250.0, ideal=True))
    assert nid == NonidealitySet.ideal(250.0)
    assert nid.is_ideal


def test_droop_formula_instantiation():
    env = Environment(temperature=200.0, chip=4)
    an = AnalogParams()
    nid = build_nonidealities(CFG, env)
    d = chip_draws(env, an)
    i_res = (an.n_junction_nodes * junction_leakage(200.0) * d.delta_junction
             + channel_leakage(-env.v_boost, 200.0))
    assert nid.droop1 == pytest.approx(i_res * (1 / (2 * 150e3)) / 10e-12)
    assert nid.droop2 == pytest.approx(10 * nid.droop1)


def test_cold_droop_is_negligible():
    cold = build_nonidealities(CFG, Environment(temperature=-40.0))
    hot = build_nonidealities(CFG, Environment(temperature=250.0))
    assert abs(cold.droop1) < 0.01 * abs(hot.droop1)


def test_supply_current_at_room_temperature_is_static():
    nid = build_nonidealities(CFG, Environment(temperature=25.0))
    assert nid.supply_current == pytest.approx(AnalogParams().i_static, rel=1e-6)


def test_supply_current_grows_with_temperature():
    temps = np.arange(-40.0, 261.0, 10.0)
    supply = [build_nonidealities(CFG, Environment(temperature=t)).supply_current for t in temps]
    assert np.all(np.diff(supply) >= 0)
    assert supply[-1] < 1.1 * supply[0]


@given(t=temperature, chip=st.integers(0, 20))
def test_nonideality_invariants(t, chip):
    nid = build_nonidealities(CFG, Environment(temperature=t, chip=chip))
    for name in ("sigma_kTC_1", "sigma_kTC_2", "sigma_input", "sigma_comparator"):
        assert getattr(nid, name) >= 0
    assert abs(nid.droop1) < CFG.v_ref and abs(nid.droop2) < CFG.v_ref
    assert nid.cmfb_frequency == pytest.approx(CFG.f_s / 512)
    assert nid == build_nonidealities(CFG, Environment(temperature=t, chip=chip))


def test_cubic_droop_grows_with_temperature():
    cubic = [build_nonidealities(CFG, Environment(temperature=t)).cubic1
             for t in (-40.0, 25.0, 150.0, 250.0)]
    assert np.all(np.diff(cubic) > 0)


def test_collapse_switch_removes_compensation():
    an = replace(AnalogParams(), collapse_temperature=255.0)
    below = build_nonidealities(CFG, Environment(temperature=250.0), analog=an)
    above = build_nonidealities(CFG, Environment(temperature=260.0), analog=an)
    normal = build_nonidealities(CFG, Environment(temperature=260.0))
    assert below == build_nonidealities(CFG, Environment(temperature=250.0))
    assert abs(above.droop1) > 100 * abs(normal.droop1)
    assert above.supply_current > normal.supply_current
