import json
import math

import numpy as np
import pytest

from oracles import dense_codespace
from qubus_qec import codes as C
from qubus_qec import state as st
from qubus_qec.noise import Fault, NoiseConfig
from qubus_qec.pauli import PauliOperator

FT = C.SchemeParams(alpha=12.0, theta=math.pi / 3, repetitions=1)


@pytest.mark.parametrize("name,n,k", [("bitflip3", 3, 1), ("shor9", 9, 1), ("steane7", 7, 1)])
def test_builtin_codes(name, n, k):
    code = C.load_code(name)
    assert (code.n, code.k) == (n, k)
    assert code.is_css
    P = dense_codespace([g.letters for g in code.generators])
    assert round(np.trace(P).real) == 2**k


def test_code_validation_errors():
    with pytest.raises(ValueError):
        C.StabilizerCode("bad", 2, 1, ("XI", "ZI"), ("XX",), ("ZZ",))
    with pytest.raises(ValueError):
        C.StabilizerCode("bad", 2, 1, ("ZZ",), ("XI",), ("ZZ",))
    with pytest.raises(ValueError):
        C.StabilizerCode("bad", 2, 1, ("ZZZ",), ("XX",), ("ZI",))
    with pytest.raises(ValueError):
        C.StabilizerCode.from_dict({"name": "x"})


def test_code_file_round_trip(tmp_path):
    code = C.load_code("steane7")
    path = tmp_path / "code.json"
    path.write_text(json.dumps(code.to_dict()))
    back = C.load_code(str(path))
    assert back == code
    with pytest.raises(OSError):
        C.load_code(str(tmp_path / "missing.json"))


def test_steane_table_covers_all_single_errors():
    code = C.load_code("steane7")
    seen = set()
    for q in range(7):
        for L in "XYZ":
            e = PauliOperator.single(7, q, L)
            s = code.syndrome_of(e)
            assert s not in seen
            seen.add(s)
            corr = C.decode(code, s)
            assert (corr * e).letters == "I" * 7 or all(
                (corr * e).commutes(g) for g in code.generators)


def test_decode_heralds_uncorrectable_syndromes():
    code = C.load_code("bitflip3")
    assert C.decode(code, (0, 0)).letters == "III"
    assert C.decode(code, (1, 1)).letters == "IXI"
    shor = C.load_code("shor9")
    bad = shor.syndrome_of(PauliOperator("XIIXIIIII"))
    with pytest.raises(C.HeraldedFailure):
        C.decode(shor, bad)
    with pytest.raises(ValueError):
        C.decode(code, (1,))


def test_encode_and_fidelity():
    code = C.load_code("steane7")
    ref = C.encode_vector(code, [0.6, 0.8j])
    s = C.encode(code, [0.6, 0.8j])
    assert C.state_fidelity(ref, s) == pytest.approx(1.0)
    assert C.state_fidelity(ref, C.apply_pauli(s, "XIIIIII")) < 1e-12
    zl = code.logical_z[0].matrix()
    assert np.vdot(C.encode_vector(code, [1, 0]), zl @ C.encode_vector(code, [1, 0])).real == pytest.approx(1)


def test_scheme_names():
    assert C.normalize_scheme("ft") == "fault-tolerant"
    assert C.normalize_scheme("photon") == "single-probe-photon"
    with pytest.raises(ValueError):
        C.normalize_scheme("carrier-pigeon")
    with pytest.raises(ValueError):
        C.SchemeParams(theta=4.0)


@pytest.mark.parametrize("error", ["IIXIIII", "IIIIIZI", "YIIIIII", "IIIIIII"])
def test_steane_ft_cycle_restores_state(error):
    code = C.load_code("steane7")
    ref = C.encode_vector(code, [0.6, 0.8])
    s = C.encode(code, [0.6, 0.8])
    noise = NoiseConfig(data_errors=[(i, L) for i, L in enumerate(error) if L != "I"])
    out, rep = C.qec_cycle(s, code, "ft", noise, FT, rng=0, reference=ref)
    assert tuple(rep["syndrome"]) == code.syndrome_of(PauliOperator(error))
    assert rep["fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert not rep["heralded_failure"]


@pytest.mark.parametrize("scheme", ["photon", "homodyne"])
def test_bitflip_single_probe_cycle(scheme):
    code = C.load_code("bitflip3")
    params = C.SchemeParams(alpha=300.0, theta=0.35, r3=8.0)
    ref = C.encode_vector(code, [0.6, 0.8])
    for q in range(3):
        s = C.encode(code, [0.6, 0.8])
        out, rep = C.qec_cycle(s, code, scheme, NoiseConfig(data_errors=[(q, "X")]), params, rng=q, reference=ref)
        assert rep["correction"].endswith("I" * q + "X" + "I" * (2 - q))
        assert rep["fidelity"] == pytest.approx(1.0, abs=1e-6)


def test_extract_syndrome_checks_register_size():
    code = C.load_code("steane7")
    with pytest.raises(ValueError):
        C.extract_syndrome(st.HybridPureState.product("000", []), code)


def test_extract_syndrome_with_injected_probe_fault_reports_trace():
    code = C.load_code("bitflip3")
    s = C.encode(code, [1, 0])
    noise = NoiseConfig(inject={"g0/ft/rep-0/couple/cr-0": [Fault("phase_kick", phi=0.0)]})
    syn, out, t, ex = C.extract_syndrome(s, code, "ft", FT, rng=0, noise=noise, return_trace=True)
    assert syn.bits == (0, 0)
    assert "g0/ft/rep-0/couple/cr-0" in ex.fired
    assert t.crs == 2 * 7


def test_ancilla_pauli_noise_is_sampled():
    code = C.load_code("bitflip3")
    s = C.encode(code, [1, 0])
    noise = NoiseConfig(pauli={"ancilla": (0.0, 0.0, 0.5)})
    outcomes = set()
    for seed in range(6):
        syn, _, _ = C.extract_syndrome(s, code, "ft", FT, rng=seed, noise=noise)
        outcomes.add(syn.bits)
    assert len(outcomes) > 1


def test_bitflip_phase_signatures():
    for bits in range(8):
        b = [(bits >> 2) & 1, (bits >> 1) & 1, bits & 1]
        s = st.HybridPureState.product("".join(map(str, b)), [])
        _, phases = C.bitflip_probe_phases(s, 0.3, 10.0)
        a_, b_, c_ = b
        assert phases[tuple(b)] == (a_ - b_, c_ - b_)
    assert C.bitflip_location(0, 0) is None
    assert C.bitflip_location(1, 0) == 0
    assert C.bitflip_location(-1, -1) == 1
    assert C.bitflip_location(0, 1) == 2
    with pytest.raises(C.HeraldedFailure):
        C.bitflip_location(1, -1)


def test_bitflip_phase_syndrome_locates_errors():
    rng = np.random.default_rng(0)
    for cw in ("000", "111"):
        for q in (None, 0, 1, 2):
            b = list(cw)
            if q is not None:
                b[q] = "1" if b[q] == "0" else "0"
            s = st.HybridPureState.product("".join(b), [])
            (m, n), _ = C.bitflip_phase_syndrome(s, 0.3, 50.0, rng)
            assert C.bitflip_location(m, n) == q
