"""Acceptance checks, one per criterion.

Each check prints a single ``criterion N: PASS|FAIL ...`` line. Run with
``pytest tests/test_acceptance.py -v -s`` or directly as a script.
"""

import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest

from qkdbound import bounds, cli, metrics, optimizer, protocol
from qkdbound.attacks import breidbart, build_delayed, canonical_pair, intercept_resend, mixture, strategy_to_kraus, verify_delayed
from qkdbound.quantum import rotation

SCAN_GRID = [0.01, 0.02, 0.05, 0.10, 0.20, 0.30]


def _report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    return ok


def criterion_1():
    checks = [
        abs(bounds.shannon_sharp_bound(0.0)) <= 1e-9,
        all(abs(bounds.shannon_sharp_bound(d) - 0.5) <= 1e-9 for d in (0.25, 0.3, 0.6, 1.0)),
        abs(bounds.tau1_bound(0.0)) <= 1e-9,
        all(abs(bounds.tau1_bound(d) - 1.0) <= 1e-9 for d in (1 / 3, 0.4, 1.0)),
        abs(bounds.delayed_tau1_bound(0.25) - 1.0) <= 1e-9,
    ]
    return _report(1, all(checks), f"bound endpoints {sum(checks)}/5 within 1e-9")


def criterion_2():
    t01, t05 = bounds.tau1_bound(0.01), bounds.tau1_bound(0.05)
    e01, e05 = bounds.eta_bar_shannon(0.01), bounds.eta_bar_shannon(0.05)
    # exact rational arithmetic: sqrt(8 d (1 - 2 d)) is rational at both points
    exact = (Fraction(96, 100) / (1 + Fraction(28, 100)) == Fraction(3, 4)
             and Fraction(8, 10) / (1 + Fraction(6, 10)) == Fraction(1, 2)
             and Fraction(28, 100) ** 2 == 8 * Fraction(1, 100) * Fraction(98, 100)
             and Fraction(6, 10) ** 2 == 8 * Fraction(1, 20) * Fraction(9, 10))
    ok = (round(t01, 2) == 0.06 and abs(t01 - 0.0566) < 1e-4 and round(t05, 2) == 0.26
          and abs(t05 - 0.2624) < 1e-4 and e01 == 0.75 and e05 == 0.5 and exact)
    return _report(2, ok, f"tau1(0.01)={t01:.6f} tau1(0.05)={t05:.6f} eta_bar={e01!r},{e05!r}")


_scans = {}


def _scan(mode):
    if mode not in _scans:
        _scans[mode] = optimizer.sharpness_scan(SCAN_GRID, mode)
    return _scans[mode]


def criterion_3():
    v = max(optimizer.max_violation(_scan(m)) for m in ("shannon", "collision"))
    return _report(3, v <= 1e-6, f"max excess over bound {v:.2e} (both modes, {len(SCAN_GRID)} points)")


def criterion_4():
    gs = max(r.slack for r in _scan("shannon") if r.target_d <= 0.25)
    gc = max(r.slack for r in _scan("collision"))
    return _report(4, gs <= 5e-3 and gc <= 5e-3, f"max gap shannon {gs:.2e}, collision {gc:.2e}")


def _random_canonical(rng):
    k = int(rng.integers(1, 4))
    return mixture([(w, canonical_pair(rng.uniform(), rng.uniform(-np.pi, np.pi), rng.uniform(0, np.pi)))
                    for w in rng.dirichlet(np.ones(k))])


def criterion_5():
    rng = np.random.default_rng(5)
    worst_i = worst_d = 0.0
    for _ in range(1000):
        s = _random_canonical(rng)
        worst_i = max(worst_i, abs(metrics.shannon_information(s)
                                   - metrics.shannon_closed_form(*metrics.closed_form_parameters(s))))
        worst_d = max(worst_d, abs(metrics.disturbance_fid(s).d_fid - metrics.disturbance_fid_expanded(s)))
    return _report(5, worst_i <= 1e-9 and worst_d <= 1e-12,
                   f"1000 attacks: info diff {worst_i:.1e}, disturbance diff {worst_d:.1e}")


def _monte_carlo(attack, seed):
    r = protocol.run_session(protocol.ProtocolConfig(1_000_000, attack=attack, seed=seed))
    t = r.transcript
    n = len(t["sender_bit"])
    err = float(np.mean(t["sender_bit"] != t["receiver_bit"]))
    return err, math.sqrt(err * (1 - err) / n), protocol.eve_accounting(r, attack).empirical_information


def criterion_6():
    ir, bb = intercept_resend(), breidbart()
    d_ir, i_ir = metrics.disturbance_fid(ir).d_fid, metrics.shannon_information(ir)
    i_bb = metrics.shannon_information(bb)
    analytic = d_ir == 0.25 and abs(i_ir - 0.5) <= 1e-12 and abs(i_bb - 0.399) <= 1e-3
    e1, s1, mi1 = _monte_carlo(ir, 61)
    e2, s2, mi2 = _monte_carlo(bb, 62)
    d_bb = metrics.disturbance_fid(bb).d_fid
    mc = abs(e1 - 0.25) <= 3 * s1 and abs(e2 - d_bb) <= 3 * s2 and abs(mi1 - 0.5) <= 0.01 and abs(mi2 - i_bb) <= 0.01
    return _report(6, analytic and mc,
                   f"I-R: D={d_ir} I={i_ir:.4f} MC err={e1:.4f} I={mi1:.4f}; "
                   f"Breidbart: I={i_bb:.4f} MC err={e2:.4f} I={mi2:.4f}")


def criterion_7():
    dev = max(abs((c - 0.5) ** 2 + (d - 0.5) ** 2 - 0.25)
              for c, d in (metrics.overlaps(t) for t in np.linspace(0, np.pi, 1000)))
    return _report(7, dev <= 1e-12, f"circle deviation {dev:.1e} over 1000 angles")


def criterion_8():
    worst = 0.0
    for eta in np.linspace(0, 1, 6):
        for theta in np.linspace(0, np.pi, 5):
            base = strategy_to_kraus(canonical_pair(eta, 0.3, theta))
            for mix in np.linspace(0, 2 * np.pi, 7):
                worst = max(worst, verify_delayed(build_delayed(base, rotation(mix))))
    reach = bounds.delayed_tau1_bound(0.25)
    return _report(8, worst <= 1e-12 and reach == 1.0, f"delayed mismatch {worst:.1e}, delayed_tau1(0.25)={reach}")


def criterion_9():
    n = 1_000_000
    lossy = protocol.run_session(protocol.ProtocolConfig(n, seed=9, loss_prob=0.9))
    sigma = math.sqrt(n * 0.05 * 0.95)
    lossy_ok = lossy.measured_error_rate == 0.0 and abs(lossy.sifted_length - 0.05 * n) <= 3 * sigma
    cfg = protocol.ProtocolConfig(200_000, attack=canonical_pair(0.6), seed=10)
    a, b = protocol.run_session(cfg), protocol.run_session(cfg)
    same = a.to_json().encode() == b.to_json().encode()
    agree = a.keys_agree and a.final_key_length > 0
    return _report(9, lossy_ok and same and agree,
                   f"sifted {lossy.sifted_length} (expect {0.05 * n:.0f} +/- {3 * sigma:.0f}), "
                   f"byte-identical={same}, keys agree={agree}")


def _cli_table(argv):
    out = io.StringIO()
    assert cli.main(argv, out) == 0
    table = list(csv.reader(io.StringIO(out.getvalue())))
    return table[0], np.array(table[1:], dtype=float)


def _monotone(col):
    return bool(np.all(np.diff(col) >= -1e-12))


def _at(table, d):
    i = int(np.argmin(np.abs(table[:, 0] - d)))
    assert abs(table[i, 0] - d) < 1e-9
    return table[i]


def criterion_10():
    _, fig1 = _cli_table(["bounds", "--curve", "shannon_sharp", "--curve", "shannon_linear", "--range", "0:0.3:31"])
    _, fig2 = _cli_table(["bounds", "--curve", "tau1", "--range", "0:0.4:41"])
    _, fig3 = _cli_table(["bounds", "--curve", "delayed_tau1", "--curve", "tau1_nondelayed", "--range", "0:0.3:31"])
    mono = all(_monotone(t[:, j]) for t in (fig1, fig2, fig3) for j in range(1, t.shape[1]))
    spots = [
        abs(_at(fig1, 0.0)[1]) <= 1e-9,
        abs(_at(fig1, 0.25)[1] - 0.5) <= 1e-9,
        np.all(fig1[:, 1] <= fig1[:, 2] + 1e-12),
        abs(_at(fig2, 0.0)[1]) <= 1e-9,
        abs(_at(fig2, 0.01)[1] - 0.0565779) <= 1e-6,
        abs(_at(fig2, 0.05)[1] - 0.262368) <= 1e-6,
        np.all(_at(fig2, 0.34)[1:] == 1.0),
        abs(_at(fig3, 0.25)[1] - 1.0) <= 1e-9,
        np.all(fig3[:, 1] >= fig3[:, 2] - 1e-12),
    ]
    return _report(10, mono and all(spots), f"three tables monotone={mono}, spot checks {sum(map(bool, spots))}/9")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_criterion(check, capsys):
    with capsys.disabled():
        print()
        ok = check()
    assert ok


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
