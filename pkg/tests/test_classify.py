import numpy as np
import pytest
import scipy.linalg

from qcondprob.channel import Channel, LinearMap, extend_apply
from qcondprob.classify import (
    DephasingGenerator,
    EBStatus,
    HolevoForm,
    cc_membership,
    classify,
    common_eigenbasis,
    decohere,
    holevo_form,
    is_cc,
    is_cc_state,
    is_cq,
    is_qc,
    partial_decohere,
    partial_decohere_limit,
    ppt_choi,
    qc_output_decomposition,
)
from qcondprob.errors import NotCC, NotQC
from qcondprob.families import (
    cc_channel,
    cq_channel,
    dephasing_channel,
    depolarizing_channel,
    identity_channel,
    qc_channel,
    random_channel,
)
from qcondprob.linalg import partial_trace
from qcondprob.states import projectors, random_density, random_povm, random_stochastic, random_unitary


def test_dephasing_qubit_is_cc():
    c = classify(dephasing_channel(2))
    assert c.is_qc and c.is_cq and c.is_cc
    assert c.eb_status is EBStatus.EB
    assert np.abs(c.cc_matrix - np.eye(2)).max() < 1e-14


def test_identity_is_not_qc_and_not_eb():
    c = classify(identity_channel(2))
    assert not c.is_qc and not c.is_cq and not c.is_cc
    assert c.eb_status is EBStatus.NOT_EB and not c.ppt
    assert c.is_unital


def test_computational_cc_channel_gives_back_its_matrix():
    t = np.array([[0.9, 0.2], [0.1, 0.8]])
    flag, got, e, f = is_cc(cc_channel(t))
    assert flag
    assert np.abs(got - t).max() < 1e-12
    assert np.abs(e - np.eye(2)).max() < 1e-12 and np.abs(f - np.eye(2)).max() < 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_random_cc_channel_in_random_bases(seed):
    rng = np.random.default_rng(seed)
    dA, dB = 2 + seed % 2, 2 + (seed // 2) % 2
    t = random_stochastic(rng, dB, dA)
    ch = cc_channel(t, random_unitary(rng, dA), random_unitary(rng, dB))
    flag, got, e, f = is_cc(ch, seed)
    assert flag
    assert cc_channel(got, e, f).distance(ch) < 1e-9
    # same multiset of entries, up to relabeling of inputs and outputs
    assert np.abs(np.sort(got.ravel()) - np.sort(t.ravel())).max() < 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_qc_and_cq_are_distinguished(seed):
    rng = np.random.default_rng(100 + seed)
    d = 3 + seed % 2
    qc = qc_channel(random_povm(rng, d, d + 1), random_stochastic(rng, d, d + 1), random_unitary(rng, d))
    assert is_qc(qc, seed).flag and not is_cq(qc, seed).flag
    cq = cq_channel(random_stochastic(rng, d, d), [random_density(rng, d) for _ in range(d)], random_unitary(rng, d))
    assert is_cq(cq, seed).flag and not is_qc(cq, seed).flag


def test_qc_with_two_outputs_is_automatically_cc():
    # the canonical effects G_0 and I - G_0 always commute
    rng = np.random.default_rng(12)
    for _ in range(5):
        qc = qc_channel(random_povm(rng, 3, 4), random_stochastic(rng, 2, 4))
        assert is_qc(qc).flag and is_cq(qc).flag and is_cc(qc)[0]


def test_qc_witness_diagonalizes_outputs():
    rng = np.random.default_rng(5)
    f = random_unitary(rng, 3)
    qc = qc_channel(random_povm(rng, 3, 4), random_stochastic(rng, 3, 4), f)
    w = is_qc(qc)
    for _ in range(5):
        out = qc(random_density(rng, 3))
        d = w.basis.conj().T @ out @ w.basis
        assert np.abs(d - np.diag(np.diagonal(d))).max() < 1e-12


def test_near_commuting_family_is_rejected():
    rng = np.random.default_rng(6)
    qc = qc_channel(random_povm(rng, 2, 3), random_stochastic(rng, 2, 3))
    mixed = random_channel(rng, 2)
    blend = qc.transfer * (1 - 1e-5) + mixed.transfer * 1e-5
    assert not is_qc(Channel.from_transfer(blend, 2)).flag


def test_common_eigenbasis_of_empty_and_scalar_family():
    cb = common_eigenbasis([], 3)
    assert np.abs(cb.basis - np.eye(3)).max() == 0
    cb = common_eigenbasis([np.eye(3)], 3)
    assert cb is not None and cb.residual < 1e-14


def ppt_onset_oracle(p):
    # partial transpose of the depolarizing conditional operator is (1 - p) SWAP + p I/2
    return -(1 - p) + p / 2 >= 0


@pytest.mark.parametrize("p", [0.0, 0.3, 0.6, 0.66, 0.67, 0.7, 0.9, 1.0])
def test_depolarizing_ppt_onset_at_two_thirds(p):
    flag, status = ppt_choi(depolarizing_channel(2, p))
    assert flag == ppt_onset_oracle(p)
    assert status is (EBStatus.EB if flag else EBStatus.NOT_EB)


def test_ppt_is_undecided_beyond_six():
    flag, status = ppt_choi(depolarizing_channel(3, 1.0))
    assert flag and status is EBStatus.UNDECIDED_PPT
    flag, status = ppt_choi(depolarizing_channel(3, 0.0))
    assert not flag and status is EBStatus.NOT_EB


@pytest.mark.parametrize("seed", range(6))
def test_holevo_form_reconstructs_and_aggregates_effects(seed):
    rng = np.random.default_rng(200 + seed)
    d = 2 + seed % 2
    effects = random_povm(rng, d, d + 2)
    p = random_stochastic(rng, d, d + 2)
    qc = qc_channel(effects, p)
    form = holevo_form(qc, seed)
    assert np.abs(form.transfer() - qc.transfer).max() < 1e-12
    # canonical effects are sum_i p[j, i] F_i, matched through the returned basis
    for j in range(d):
        fj = form.basis[:, j]
        k = int(np.abs(fj).argmax())
        expected = sum(p[k, i] * effects[i] for i in range(d + 2))
        assert np.abs(form.effects[j] - expected).max() < 1e-10


def test_holevo_form_requires_qc():
    with pytest.raises(NotQC):
        holevo_form(identity_channel(2))


@pytest.mark.parametrize("seed", range(8))
def test_qc_output_decomposition(seed):
    rng = np.random.default_rng(300 + seed)
    dA, dC = 2 + seed % 2, 2 + (seed // 2) % 2
    effects = random_povm(rng, dA, 3)
    p = random_stochastic(rng, dA, 3)
    f = random_unitary(rng, dA)
    qc = qc_channel(effects, p, f)
    rho = random_density(rng, dC * dA)
    for form in (None, HolevoForm.qc(effects, p, f)):
        dec = qc_output_decomposition(qc, rho, dC, form)
        assert dec.flag and dec.residual < 1e-12
        assert dec.min_sigma_eigenvalue > -1e-12
        assert np.abs(sum(dec.sigma) - partial_trace(rho, (dC, dA), "B")).max() < 1e-12
        assert abs(dec.p_kl.sum() - 1) < 1e-12
    # explicit form: sigma_l = Tr_A[rho (I (x) F_l)]
    dec = qc_output_decomposition(qc, rho, dC, HolevoForm.qc(effects, p, f))
    for fl, sl in zip(effects, dec.sigma):
        assert np.abs(sl - partial_trace(rho @ np.kron(np.eye(dC), fl), (dC, dA), "B")).max() < 1e-14


def test_cc_state_detection():
    rng = np.random.default_rng(7)
    c, e = random_unitary(rng, 2), random_unitary(rng, 3)
    pc, pe = projectors(c), projectors(e)
    w = rng.dirichlet(np.ones(6)).reshape(2, 3)
    rho = sum(w[a, b] * np.kron(pc[a], pe[b]) for a in range(2) for b in range(3))
    st = is_cc_state(rho, (2, 3))
    assert st.flag and st.residual < 1e-12
    assert not is_cc_state(random_density(rng, 6), (2, 3)).flag
    # classical on one side only
    cq = sum(0.5 * np.kron(random_density(rng, 2), pe[b]) for b in range(2))
    assert not is_cc_state(cq, (2, 3)).flag


def _cq_state(rng, dC, dA):
    # sum_k p_k |e~_k><e~_k| (x) sigma_k: classical on C in a random basis, arbitrary on A
    p = rng.dirichlet(np.ones(dC))
    tilde = projectors(random_unitary(rng, dC))
    return sum(pk * np.kron(t, random_density(rng, dA)) for pk, t in zip(p, tilde))


def _schmidt_aligned_pure(rng, dC, e):
    # sum_i c_i |e~_i> (x) |e_i> with the A-side Schmidt vectors taken from e
    r = min(dC, e.shape[0])
    c = rng.normal(size=r) + 1j * rng.normal(size=r)
    c /= np.linalg.norm(c)
    tilde = random_unitary(rng, dC)
    psi = sum(c[i] * np.kron(tilde[:, i], e[:, i]) for i in range(r))
    return np.outer(psi, psi.conj())


@pytest.mark.parametrize("seed", range(6))
def test_cc_membership_engineered_members_and_generic(seed):
    rng = np.random.default_rng(400 + seed)
    dA, dC = 2 + seed % 2, 3 - seed % 2
    e = random_unitary(rng, dA)
    ch = cc_channel(random_stochastic(rng, dA, dA), e, random_unitary(rng, dA))
    _, _, e_found, _ = is_cc(ch, seed)
    for rho in (_schmidt_aligned_pure(rng, dC, e_found), _cq_state(rng, dC, dA)):
        m = cc_membership(ch, rho, dC, seed)
        assert m.flag and m.agree and m.output_cc
        assert m.commutator_norms.max() < 1e-10
    m = cc_membership(ch, random_density(rng, dC * dA), dC, seed)
    assert not m.flag and m.agree and not m.output_cc


def test_rank_deficient_matrix_makes_output_cc_for_non_members():
    rng = np.random.default_rng(11)
    const = np.array([[0.3, 0.3], [0.7, 0.7]])
    m = cc_membership(cc_channel(const), random_density(rng, 4), 2)
    assert not m.flag and m.agree
    assert m.output_cc


def test_cc_membership_requires_cc_channel():
    with pytest.raises(NotCC):
        cc_membership(identity_channel(2), np.eye(4) / 4, 2)


def test_decohere_matches_semigroup_exponential():
    rng = np.random.default_rng(8)
    for d in (2, 3):
        gen = DephasingGenerator(random_unitary(rng, d), 1.7)
        rho = random_density(rng, d)
        for t in (0.0, 0.1, 0.5, 2.0):
            via_expm = (scipy.linalg.expm(-t * gen.transfer()) @ rho.ravel()).reshape(d, d)
            assert np.abs(decohere(gen, rho, t) - via_expm).max() < 1e-12
        assert np.abs(decohere(gen, rho, 0) - rho).max() == 0
        assert np.abs(decohere(gen, rho, np.inf) - gen.project(rho)).max() == 0


def test_coherence_halves_at_ln2_over_gamma():
    gamma = 2.0
    gen = DephasingGenerator(np.eye(2), gamma)
    rho = np.array([[0.6, 0.3], [0.3, 0.4]])
    out = decohere(gen, rho, np.log(2) / gamma)
    assert abs(out[0, 1] - 0.15) < 1e-15
    assert np.abs(np.diagonal(out) - [0.6, 0.4]).max() < 1e-15


def test_partial_decohere_matches_extended_exponential():
    rng = np.random.default_rng(9)
    gen = DephasingGenerator(random_unitary(rng, 2), 0.8)
    rho = random_density(rng, 6)
    for t in (0.3, 1.1):
        semigroup = LinearMap(scipy.linalg.expm(-t * gen.transfer()), 2)
        assert np.abs(partial_decohere(gen, rho, 3, t) - extend_apply(semigroup, rho, 3)).max() < 1e-12
    limit = partial_decohere_limit(gen, rho, 3)
    assert np.abs(partial_decohere(gen, rho, 3, np.inf) - limit).max() < 1e-15
    assert np.abs(extend_apply(dephasing_channel(2, gen.basis), rho, 3) - limit).max() < 1e-14


def test_dephasing_generator_rejects_bad_parameters():
    with pytest.raises(ValueError):
        DephasingGenerator(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        decohere(DephasingGenerator(np.eye(2), 1.0), np.eye(2) / 2, -1.0)
