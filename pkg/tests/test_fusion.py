import numpy as np
import pytest

from molfuse.fusion import (
    DegenerateColumnError,
    FusionWeights,
    GbConfig,
    InvalidConfigError,
    ModalOutputs,
    RfConfig,
    SgdConfig,
    SplitDisciplineError,
    TooFewSamplesError,
    collect_outputs,
    fit_elastic,
    fit_gb,
    fit_lasso,
    fit_rf,
    fit_sgd,
    fixed_mean_weights,
    fused_predict,
    select_lambda,
)
from molfuse.numcore import Rng


def planted_data(m=200, noise=0.01, seed=0):
    rng = np.random.default_rng(seed)
    o = rng.normal(0.0, 1.0, (m, 3))
    w = np.array([0.5, 0.3, 0.2])
    y = o @ w + rng.normal(0.0, noise, m)
    return o, y, w


def test_lasso_recovers_planted_weights():
    o, y, w_true = planted_data()
    w = np.array(fit_lasso(o, y, 1e-3).w)
    assert np.abs(w - w_true).max() < 0.05


def test_lasso_matches_least_squares_at_zero_lambda():
    o, y, _ = planted_data(noise=0.0)
    w = np.array(fit_lasso(o, y, 0.0).w)
    w_ols = np.linalg.lstsq(o, y, rcond=None)[0]
    assert np.abs(w - w_ols).max() < 1e-6


def test_lasso_full_shrinkage():
    o, y, _ = planted_data()
    lam = np.abs(o.T @ y).max() / o.shape[0]
    assert fit_lasso(o, y, lam * 1.0001).w == (0.0, 0.0, 0.0)


def test_lasso_informative_column_with_noise_columns():
    rng = np.random.default_rng(3)
    col = rng.normal(0, 1, 300)
    o = np.column_stack([col, rng.normal(0, 1, 300), rng.normal(0, 1, 300)])
    w = fit_lasso(o, col.copy(), 1e-3).w
    assert abs(w[0] - 1.0) < 0.05 and abs(w[1]) < 0.05 and abs(w[2]) < 0.05


def test_lasso_degenerate_column():
    o, y, _ = planted_data(m=50)
    o[:, 1] = 2.5
    with pytest.raises(DegenerateColumnError):
        fit_lasso(o, y, 0.0)
    fit_lasso(o, y, 0.01)  # regularized fit stays defined


def test_elastic_alpha_one_equals_lasso():
    o, y, _ = planted_data()
    for lam in (0.0, 1e-3, 1e-2, 1e-1):
        wl = np.array(fit_lasso(o, y, lam).w)
        we = np.array(fit_elastic(o, y, lam, 1.0).w)
        assert np.abs(wl - we).max() <= 1e-10


def test_elastic_zero_lambda_is_ols():
    o, y, _ = planted_data(noise=0.0)
    w = np.array(fit_elastic(o, y, 0.0, 0.5).w)
    w_ols = np.linalg.lstsq(o, y, rcond=None)[0]
    assert np.abs(w - w_ols).max() < 1e-6


def test_elastic_identical_columns_share_weight():
    rng = np.random.default_rng(1)
    base = rng.normal(0, 1, (120, 2))
    o = np.column_stack([base[:, 0], base[:, 0], base[:, 1]])
    y = base[:, 0] + 0.5 * base[:, 1]
    w = fit_elastic(o, y, 0.1, 0.0).w
    assert abs(w[0] - w[1]) < 1e-8


def test_elastic_validates_alpha():
    o, y, _ = planted_data(m=20)
    with pytest.raises(InvalidConfigError):
        fit_elastic(o, y, 0.1, 1.5)


def test_sgd_recovers_planted_weights():
    o, y, w_true = planted_data()
    w = np.array(fit_sgd(o, y, SgdConfig(), Rng(1)).w)
    assert np.abs(w - w_true).max() < 0.05


def test_sgd_matches_ols_on_exact_data():
    o, y, w_true = planted_data(noise=0.0)
    w = np.array(fit_sgd(o, y, SgdConfig(), Rng(2)).w)
    assert np.abs(w - w_true).max() < 1e-3


def test_sgd_duplicated_column_design():
    rng = np.random.default_rng(5)
    col = rng.normal(0, 1, 150)
    o = np.column_stack([col, col, col])
    y = col.copy()
    w = fit_sgd(o, y, SgdConfig(), Rng(3))
    fused = o @ np.array(w.w)
    assert np.mean((y - fused) ** 2) < 1e-6 * y.var()


def test_sgd_deterministic_per_seed():
    o, y, _ = planted_data()
    a = fit_sgd(o, y, SgdConfig(), Rng(7)).w
    b = fit_sgd(o, y, SgdConfig(), Rng(7)).w
    assert a == b


def test_rf_informative_column():
    rng = np.random.default_rng(3)
    o = rng.normal(0, 1, (200, 3))
    y = 2.0 * o[:, 0] + rng.normal(0, 0.05, 200)
    w = fit_rf(o, y, RfConfig(seed=5)).w
    assert w[0] > 0.8


def test_rf_symmetry_over_identical_columns():
    rng = np.random.default_rng(0)
    col = rng.normal(0, 1, 60)
    o = np.column_stack([col, col, col])
    y = col + rng.normal(0, 0.05, 60)
    mean_w = np.mean([fit_rf(o, y, RfConfig(seed=s)).w for s in range(20)], axis=0)
    assert np.all(np.abs(mean_w - 1 / 3) < 0.15)


def test_rf_weights_are_convex_combination():
    o, y, _ = planted_data(m=80)
    w = np.array(fit_rf(o, y, RfConfig(seed=1)).w)
    assert (w >= 0.0).all() and abs(w.sum() - 1.0) < 1e-12


def test_rf_too_few_samples():
    with pytest.raises(TooFewSamplesError):
        fit_rf(np.zeros((5, 3)), np.zeros(5), RfConfig())


def test_gb_informative_column():
    rng = np.random.default_rng(4)
    o = rng.normal(0, 1, (200, 3))
    y = 1.5 * o[:, 0] + rng.normal(0, 0.05, 200)
    w = fit_gb(o, y, GbConfig(seed=2)).w
    assert w[0] > 0.8


def test_gb_zero_rounds_invalid():
    o, y, _ = planted_data(m=40)
    with pytest.raises(InvalidConfigError):
        fit_gb(o, y, GbConfig(n_rounds=0))


def test_gb_weights_are_convex_combination():
    o, y, _ = planted_data(m=80)
    w = np.array(fit_gb(o, y, GbConfig(seed=3)).w)
    assert (w >= 0.0).all() and abs(w.sum() - 1.0) < 1e-12


def test_fused_predict_cases():
    assert fused_predict((3.0, 6.0, 9.0), fixed_mean_weights()) == 6.0
    w = FusionWeights(w=(1.0, 0.0, 0.0), method="lasso")
    assert fused_predict((2.5, -4.0, 9.9), w) == 2.5
    base = fused_predict((1.0, 2.0, 3.0), w)
    assert fused_predict((3.0, 6.0, 9.0), w) == 3.0 * base


def test_planted_lasso_weight_row_projection():
    o, y, _ = planted_data(noise=0.0)
    w = fit_lasso(o, y, 0.0)
    assert abs(fused_predict((1.0, 0.0, 0.0), w) - 0.5) < 1e-6


def test_split_discipline_enforced():
    o, y, _ = planted_data(m=30)
    for fitter in (
        lambda m: fit_lasso(m, y, 0.01),
        lambda m: fit_elastic(m, y, 0.01, 0.5),
        lambda m: fit_rf(m, y, RfConfig()),
        lambda m: fit_gb(m, y, GbConfig()),
        lambda m: fit_sgd(m, y, SgdConfig(), Rng(0)),
    ):
        with pytest.raises(SplitDisciplineError):
            fitter(ModalOutputs(o, split="test"))
        fitter(ModalOutputs(o, split="tuning"))


def test_select_lambda_from_grid():
    o, y, _ = planted_data(noise=0.0)
    lam = select_lambda(o, y, 1.0, Rng(0))
    assert lam == 1e-3  # exact linear data prefers the weakest penalty


def test_collect_outputs_matches_individual_heads(tiny_model_config):
    from molfuse.chemlex import EncodedSeq
    from molfuse.ecfp import ecfp
    from molfuse.encoders import BiGruHead, FpBatch, GcnHead, GraphBatch, SeqBatch, TransformerHead
    from molfuse.molgraph import featurize, normalized_adjacency, parse_molecule

    heads = (
        TransformerHead(6, 8, tiny_model_config, Rng(1)),
        BiGruHead(tiny_model_config, Rng(2)),
        GcnHead(tiny_model_config, Rng(3)),
    )
    smiles = ["CCO", "CCC"]
    enc = [EncodedSeq(np.array([1, 1, 2, 0, 0, 0, 0, 0]), 3), EncodedSeq(np.array([1, 1, 1, 0, 0, 0, 0, 0]), 3)]
    mols = [parse_molecule(s) for s in smiles]
    data = (
        SeqBatch.from_encoded(enc),
        FpBatch.from_fingerprints([ecfp(s) for s in smiles]),
        GraphBatch([(featurize(m), normalized_adjacency(m)) for m in mols]),
    )
    out = collect_outputs(heads, data, split="tuning")
    assert out.matrix.shape == (2, 3)
    for j, (head, batch) in enumerate(zip(heads, data)):
        assert np.array_equal(out.matrix[:, j], head.predict(batch)[0])
    again = collect_outputs(heads, data, split="tuning")
    assert np.array_equal(out.matrix, again.matrix)
