import json

import numpy as np
import pytest

from qkdbound.attacks import Sign, StrategyKind
from qkdbound.config import ConfigError, describe_defaults, load_config, parse_config
from qkdbound.protocol import ECMode


def cfg(session=None, **sections):
    body = dict(sections)
    if session is not None:
        body["session"] = session
    return parse_config(json.dumps(body, indent=2))


class TestSession:
    def test_defaults(self):
        c = cfg({"n_signals": 100})
        assert c.session.n_signals == 100
        assert c.session.attack is None
        assert c.session.sample_fraction == 0.1
        assert c.session.ec_mode is ECMode.ORACLE

    def test_full(self):
        c = cfg({"n_signals": 100, "seed": 4, "loss_prob": 0.5, "ec_mode": "block-parity",
                 "delayed_tau1": True, "attack": {"kind": "breidbart"}})
        assert c.session.loss_prob == 0.5
        assert c.session.delayed_tau1 is True
        assert c.session.attack.ops[0].theta == pytest.approx(np.pi / 8)

    def test_canonical_ops(self):
        c = cfg({"n_signals": 10, "attack": {"kind": "shannon-canonical",
                                             "ops": [{"eta": 0.5, "phi": 0.1}]}})
        op = c.session.attack.ops[0]
        assert op.eta == pytest.approx(0.5) and op.phi == 0.1

    def test_symmetric_ops(self):
        c = cfg({"n_signals": 10, "attack": {"kind": "collision-symmetric",
                                             "ops": [{"a": 0.2, "b": 0.8, "sign": "plus", "theta": 0.4}]}})
        op = c.session.attack.ops[0]
        assert op.sign is Sign.PLUS
        assert c.session.attack.kind is StrategyKind.COLLISION_SYMMETRIC

    def test_raw_kraus(self):
        c = cfg({"n_signals": 10, "attack": {"kind": "raw-kraus",
                                             "operators": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}})
        assert c.session.attack.kraus.n_outcomes == 2

    def test_intercept_basis(self):
        c = cfg({"n_signals": 10, "attack": {"kind": "intercept-resend", "basis": "circular"}})
        assert c.session.attack.ops[0].theta == pytest.approx(np.pi / 4)


class TestErrors:
    def test_unknown_key_has_path_and_line(self):
        text = '{\n  "session": {\n    "n_signals": 10,\n    "colour": 1\n  }\n}'
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.path == "session.colour"
        assert exc.value.line == 4

    def test_unknown_top_level(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config('{"bogus": 1}')

    def test_unknown_attack_kind(self):
        with pytest.raises(ConfigError, match="unknown attack kind"):
            cfg({"n_signals": 10, "attack": {"kind": "laser"}})

    def test_unknown_op_key(self):
        with pytest.raises(ConfigError, match=r"ops\[0\]\.sign"):
            cfg({"n_signals": 10, "attack": {"kind": "shannon-canonical", "ops": [{"eta": 0.5, "sign": "plus"}]}})

    @pytest.mark.parametrize("session", [{}, {"n_signals": "many"}, {"n_signals": 1.5},
                                         {"n_signals": 10, "loss_prob": 1.0},
                                         {"n_signals": 10, "delayed_tau1": 1}])
    def test_bad_values(self, session):
        with pytest.raises(ConfigError):
            cfg(session)

    def test_eta_and_weights_conflict(self):
        with pytest.raises(ConfigError, match="either"):
            cfg({"n_signals": 10, "attack": {"kind": "shannon-canonical", "ops": [{"eta": 0.5, "a": 0.1, "b": 0.9}]}})

    def test_invalid_json(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            parse_config("{\n  nope\n}")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")


class TestOtherSections:
    def test_search(self):
        c = cfg(search={"grid_size": 8, "xatol": 1e-6})
        assert c.search.grid_size == 8 and c.search.xatol == 1e-6

    def test_search_unknown(self):
        with pytest.raises(ConfigError):
            cfg(search={"grid": 8})

    def test_curves(self):
        c = cfg(curves={"names": "tau1", "range": "0:0.4:41"})
        assert c.curve_names == ("tau1",) and c.curve_range == "0:0.4:41"

    def test_describe_defaults_lists_everything(self):
        text = describe_defaults()
        for key in ("sample_fraction", "grid_size", "raw-kraus", "0:0.3:31"):
            assert key in text
