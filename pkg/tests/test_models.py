import numpy as np
import pytest

from oracles import check_model_grads
from tempocast.autodiff import tensor as ops
from tempocast.autodiff.tensor import Tensor
from tempocast.data import N_COVARIATES
from tempocast.errors import ConfigError, ContractError, DimensionError
from tempocast.models import (
    LstmConfig,
    StackedLSTM,
    TcnConfig,
    TemporalConvNet,
    TemporalFusionTransformer,
    TftConfig,
    build_model,
)
from tempocast.models.layers import (
    GatedResidualNetwork,
    InterpretableMultiHeadAttention,
    LSTMLayer,
    VariableSelectionNetwork,
    causal_mask,
    grn_forward,
    lstm_cell,
    mha_forward,
    vsn_forward,
)
from tempocast.models.tft import StaticCovariateEncoder, static_encoder_forward

C = N_COVARIATES


def rngs(seed=0):
    return np.random.default_rng(seed), np.random.default_rng(seed + 100)


def inputs(model, batch=2, seed=0):
    r = np.random.default_rng(seed)
    past = r.normal(size=(batch, model.input_len, 1 + model.config.n_covariates))
    future = r.normal(size=(batch, model.output_len, model.config.n_covariates))
    return past, future


# -------------------------------------------------------------------- GRN
def test_grn_zero_value_branch_reduces_to_norm_of_skip():
    r, d = rngs()
    grn = GatedResidualNetwork(5, 8, r, d, context_size=3)
    grn.glu.value.weight.data[:] = 0
    grn.glu.value.bias.data[:] = 0
    grn.norm.gain.data[:] = np.random.default_rng(1).normal(size=8)
    a = Tensor(np.random.default_rng(2).normal(size=(4, 5)))
    c = Tensor(np.random.default_rng(3).normal(size=3))
    expected = ops.layer_norm(grn.skip(a), grn.norm.gain, grn.norm.bias).data
    assert np.array_equal(grn_forward(grn, a, c).data, expected)


def test_grn_shapes_and_context_contract():
    r, d = rngs()
    assert GatedResidualNetwork(5, 64, r, d)(Tensor(np.ones((2, 5)))).shape == (2, 64)
    assert GatedResidualNetwork(64, 64, r, d).skip is None
    with pytest.raises(ConfigError):
        GatedResidualNetwork(4, 4, r, d)(Tensor(np.ones((1, 4))), Tensor(np.ones(4)))
    with pytest.raises(DimensionError):
        GatedResidualNetwork(4, 4, r, d)(Tensor(np.ones((1, 5))))


def test_grn_gradients():
    worst = 0.0
    for seed in range(20):
        r, d = rngs(seed)
        grn = GatedResidualNetwork(3, 4, r, d, output_size=5, context_size=2)
        a, c = Tensor(r.normal(size=(3, 3))), Tensor(r.normal(size=2))
        w = r.normal(size=(3, 5))
        worst = max(worst, check_model_grads(grn.parameters(), lambda: (grn(a, c) * w).sum(), r))
    assert worst < 1e-3


# -------------------------------------------------------------------- VSN
def test_vsn_single_variable_weight_is_one():
    r, d = rngs()
    vsn = VariableSelectionNetwork(1, 4, r, d)
    _, w = vsn_forward(vsn, [Tensor(np.random.default_rng(1).normal(size=(3, 6, 4)))])
    assert np.all(w.data == 1.0)


def test_vsn_weights_sum_to_one():
    r, d = rngs()
    vsn = VariableSelectionNetwork(5, 4, r, d, context_size=4)
    emb = [Tensor(np.random.default_rng(i).normal(size=(2, 7, 4))) for i in range(5)]
    out, w = vsn(emb, Tensor(np.ones(4)))
    assert out.shape == (2, 7, 4) and w.shape == (2, 7, 5)
    assert np.all(np.abs(w.data.sum(axis=-1) - 1) < 1e-9)
    with pytest.raises(ConfigError):
        vsn([])


def test_vsn_mirrored_variables_permute_weights():
    r, dr = rngs(4)
    d = 3
    vsn = VariableSelectionNetwork(2, d, r, dr)
    t0, t1 = vsn.transforms
    for (_, p0), (_, p1) in zip(t0.named_parameters(), t1.named_parameters()):
        p1.data[...] = p0.data
    sel = vsn.selector
    # swap-equivariant selector: skip weights [[U, V], [V, U]] and a branch that treats both outputs alike
    u, v = r.normal(size=d), r.normal(size=d)
    sel.skip.weight.data[...] = np.block([[u[:, None], v[:, None]], [v[:, None], u[:, None]]])
    half = sel.dense1.weight.data[:d].copy()
    sel.dense1.weight.data[d:] = half
    for lin in (sel.glu.gate, sel.glu.value):
        lin.weight.data[:, 1] = lin.weight.data[:, 0]
        lin.bias.data[1] = lin.bias.data[0]
    e = np.random.default_rng(9)
    x1, x2 = e.normal(size=(5, d)), e.normal(size=(5, d))
    out_a, w_a = vsn([Tensor(x1), Tensor(x2)])
    out_b, w_b = vsn([Tensor(x2), Tensor(x1)])
    assert np.allclose(w_a.data, w_b.data[:, ::-1], atol=1e-14)
    assert np.allclose(out_a.data, out_b.data, atol=1e-14)
    assert not np.allclose(w_a.data[:, 0], 0.5)


# ---------------------------------------------------------- static encoder
def test_static_encoder_zero_embedding_gives_norm_of_zero():
    r, d = rngs()
    enc = StaticCovariateEncoder(6, 0.0, r, d)
    for g in enc.grns:
        for name, p in g.named_parameters():
            if name.endswith("bias") and "norm" not in name:
                p.data[:] = 0
        g.norm.bias.data[:] = np.random.default_rng(3).normal(size=6)
    contexts = static_encoder_forward(enc, Tensor(np.zeros(6)))
    assert len(contexts) == 4 and all(c.shape == (6,) for c in contexts)
    for g, ctx in zip(enc.grns, contexts):
        ref = ops.layer_norm(Tensor(np.zeros((1, 6))), g.norm.gain, g.norm.bias).data[0]
        assert np.array_equal(ctx.data, ref)


def tiny_tft(seed=0, **kw):
    cfg = dict(input_len=4, output_len=2, hidden_size=8, lstm_layers=1, attention_heads=1, dropout=0.0,
               n_covariates=2)
    cfg.update(kw)
    return TemporalFusionTransformer(TftConfig(**cfg), seed=seed)


def test_gradient_reaches_static_embedding():
    m = tiny_tft(3)
    past, fut = inputs(m)
    out, _ = m.forward(past, fut)
    out.sum().backward()
    assert np.any(m.static_embedding.grad != 0)


# ------------------------------------------------------------------- LSTM
def test_lstm_cell_zero_state_gives_zero():
    r, _ = rngs()
    layer = LSTMLayer(3, 4, r)
    layer.bias.data[:] = 0
    h, c = lstm_cell(layer, Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))), Tensor(np.zeros((2, 4))))
    assert np.array_equal(h.data, np.zeros((2, 4))) and np.array_equal(c.data, np.zeros((2, 4)))


def test_lstm_forget_bias_is_one():
    layer = LSTMLayer(2, 3, np.random.default_rng(0))
    assert layer.bias.data.tolist() == [0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0]


def test_lstm_gates_in_open_unit_interval():
    r = np.random.default_rng(1)
    layer = LSTMLayer(3, 4, r)
    z = layer.project(Tensor(r.normal(scale=5, size=(50, 3)))) + ops.matmul(Tensor(r.normal(size=(50, 4))), layer.w_h)
    gates = ops.sigmoid(z[..., :12]).data
    assert np.all((gates > 0) & (gates < 1))


def test_lstm_cell_gradients():
    worst = 0.0
    for seed in range(20):
        r = np.random.default_rng(seed)
        layer = LSTMLayer(3, 4, r)
        x, h, c = (Tensor(r.normal(size=s)) for s in [(2, 3), (2, 4), (2, 4)])
        w1, w2 = r.normal(size=(2, 4)), r.normal(size=(2, 4))

        def loss():
            h2, c2 = lstm_cell(layer, x, h, c)
            return (h2 * w1).sum() + (c2 * w2).sum()

        worst = max(worst, check_model_grads(layer.parameters(), loss, r))
    assert worst < 1e-3


def test_stacked_lstm_parameter_count_default_config():
    m = StackedLSTM(LstmConfig())
    # layer 1: 4(25(12+25)+25) = 3800; layers 2-3: 4(25*50+25) = 5100 each; head 25*36+36 = 936
    assert m.expected_parameter_count() == 3800 + 2 * 5100 + 936 == 14936
    assert m.num_parameters() == 14936


def test_stacked_lstm_shapes():
    m = StackedLSTM(LstmConfig(input_len=6, output_len=5, hidden_size=3))
    past, fut = inputs(m, batch=4)
    assert m.forward(past).shape == (4, 5)
    assert m.predict(past, fut)["point"].shape == (4, 5)


# -------------------------------------------------------------- attention
def test_mha_zero_queries_give_uniform_weights():
    r, _ = rngs()
    attn = InterpretableMultiHeadAttention(4, 2, r)
    attn.q_proj.weight.data[:] = 0
    attn.q_proj.bias.data[:] = 0
    x = Tensor(np.random.default_rng(1).normal(size=(2, 5, 4)))
    out, w = mha_forward(attn, x, x, x)
    assert np.allclose(w.data, 1 / 5, atol=1e-15)
    colmean = attn.v_proj(x).data.mean(axis=1, keepdims=True)
    expected = attn.out_proj(Tensor(np.broadcast_to(colmean, (2, 5, 2)).copy())).data
    assert np.allclose(out.data, expected, atol=1e-14)


def test_mha_causal_mask_and_config_error():
    r, _ = rngs()
    attn = InterpretableMultiHeadAttention(4, 2, r)
    x = Tensor(np.random.default_rng(1).normal(size=(1, 6, 4)))
    _, w = attn(x, x, x, mask=causal_mask(6))
    assert np.all(w.data[..., causal_mask(6)] == 0)
    assert np.all(np.abs(w.data.sum(axis=-1) - 1) < 1e-12)
    with pytest.raises(ConfigError):
        InterpretableMultiHeadAttention(5, 2, r)


def test_mha_gradients():
    r, _ = rngs(2)
    attn = InterpretableMultiHeadAttention(4, 2, r)
    x = Tensor(r.normal(size=(2, 5, 4)))
    w = r.normal(size=(2, 5, 4))
    loss = lambda: (attn(x, x, x, mask=causal_mask(5))[0] * w).sum()  # noqa: E731
    assert check_model_grads(attn.parameters(), loss, r, max_entries=8) < 1e-3


# -------------------------------------------------------------------- TFT
def test_tft_default_config_output_shape():
    m = TemporalFusionTransformer(TftConfig(), seed=0)
    past, fut = inputs(m, batch=2)
    out, trace = m.forward(past, fut)
    assert out.shape == (2, 36, 3)
    assert trace.attention.shape == (2, 2, 66, 66)
    assert trace.past_selection.shape == (2, 30, 12) and trace.future_selection.shape == (2, 36, 11)


def test_tft_trace_properties():
    m = tiny_tft(1, attention_heads=2)
    past, fut = inputs(m)
    res = m.predict(past, fut)
    tr = res["trace"]
    assert np.all(np.abs(tr.attention.sum(axis=-1) - 1) < 1e-6)
    assert np.all(tr.attention[..., causal_mask(6)] == 0)
    assert np.all(np.abs(tr.past_selection.sum(axis=-1) - 1) < 1e-6)
    assert np.all(np.abs(tr.future_selection.sum(axis=-1) - 1) < 1e-6)
    assert set(res["quantiles"]) == {0.1, 0.5, 0.9}
    assert np.array_equal(res["point"], res["quantiles"][0.5])


def test_trace_check_detects_mask_violation():
    m = tiny_tft()
    _, trace = m.forward(*inputs(m))
    trace.attention[0, 0, 0, 3] = 0.1
    with pytest.raises(AssertionError):
        trace.check()


def test_tft_future_perturbation_is_causal():
    m = tiny_tft(2, output_len=4)
    m.eval()
    past, fut = inputs(m, batch=1)
    base = m.predict(past, fut)["point"][0]
    for j in range(4):
        bumped = fut.copy()
        bumped[0, j] += 3.0
        out = m.predict(past, bumped)["point"][0]
        assert np.array_equal(out[:j], base[:j])
        assert not np.array_equal(out[j:], base[j:])


def test_tft_config_validation():
    with pytest.raises(ConfigError):
        TftConfig(hidden_size=10, attention_heads=3)
    with pytest.raises(ConfigError):
        TftConfig(quantiles=(0.1, 0.9))
    with pytest.raises(ConfigError):
        TftConfig(quantiles=(0.5, 0.1, 0.9))
    with pytest.raises(ConfigError):
        TftConfig(dropout=1.0)


def test_tft_mse_mode_and_loss_validation():
    from tempocast.data import WindowBatch

    m = tiny_tft()
    past, fut = inputs(m)
    batch = WindowBatch(past, fut, np.zeros((2, 2)))
    assert m.training_loss(batch, "mse").item() >= 0
    assert m.training_loss(batch).item() >= 0
    with pytest.raises(ConfigError):
        m.training_loss(batch, "huber")
    with pytest.raises(ContractError):
        build_model("lstm", LstmConfig(input_len=4, output_len=3, n_covariates=2)).training_loss(batch)


# -------------------------------------------------------------------- TCN
def tiny_tcn(layers=2, kernel=3, seed=0, **kw):
    cfg = dict(input_len=8, output_len=3, kernel_size=kernel, filters=3, layers=layers, dropout=0.0, n_covariates=2)
    cfg.update(kw)
    return TemporalConvNet(TcnConfig(**cfg), seed=seed)


@pytest.mark.parametrize("length", [1, 2, 7, 40])
def test_tcn_same_length(length):
    m = tiny_tcn()
    assert m.sequence_forward(np.ones((2, length, 3))).shape == (2, length, 1)


def test_tcn_receptive_field_formula():
    assert TcnConfig().receptive_field == 61
    assert TcnConfig(kernel_size=2, layers=1).receptive_field == 3
    assert TcnConfig(dilation_base=3, layers=2).receptive_field == 1 + 2 * 2 * (9 - 1) // 2


def test_tcn_requires_input_at_least_output():
    with pytest.raises(ConfigError):
        TemporalConvNet(TcnConfig(input_len=10, output_len=28))


def test_tcn_inputs_carry_prediction_date_covariates():
    m = tiny_tcn()
    past, fut = inputs(m, batch=1)
    x = m.assemble_inputs(past, fut)
    assert np.array_equal(x[0, :, 0], past[0, :, 0])
    cov = np.concatenate([past[0, :, 1:], fut[0]])
    assert np.array_equal(x[0, :, 1:], cov[3:11])


def test_tcn_predict_uses_last_outputs():
    m = tiny_tcn()
    past, fut = inputs(m, batch=2)
    seq = m.forward(past, fut).data[..., 0]
    assert np.array_equal(m.predict(past, fut)["point"], seq[:, -3:])


# -------------------------------------------------------- model gradients
def test_model_gradients_miniature():
    from tempocast.data import WindowBatch

    for make in (lambda s: tiny_tft(s),
                 lambda s: StackedLSTM(LstmConfig(input_len=4, output_len=2, hidden_size=3, dropout=0.0, n_covariates=2), seed=s),
                 lambda s: tiny_tcn(seed=s, input_len=4, output_len=2)):
        worst = 0.0
        for seed in range(3):
            m = make(seed)
            r = np.random.default_rng(seed)
            past, fut = inputs(m, batch=2, seed=seed)
            batch = WindowBatch(past, fut, r.normal(size=(2, 2)))
            worst = max(worst, check_model_grads(m.parameters(), lambda: m.training_loss(batch), r, max_entries=2))
        assert worst < 1e-3, type(m).__name__


def test_build_model_rejects_unknown():
    with pytest.raises(ConfigError):
        build_model("gru")
    with pytest.raises(ConfigError):
        build_model("tcn", {"kernel": 3})
    assert build_model("tcn", {"layers": 2}).config.layers == 2


def test_seeded_construction_is_identical():
    from tempocast.autodiff.serialize import dumps

    assert dumps(build_model("tft", TftConfig(hidden_size=8), seed=5).parameter_set()) == \
        dumps(build_model("tft", TftConfig(hidden_size=8), seed=5).parameter_set())
