"""Write data/ieee14.json (standard IEEE 14-bus case) and its base controls."""
import json
import pathlib

BASE = 100.0
# id kind Pd Qd Bs
BUSES = [
    (1, "slack", 0.0, 0.0, 0.0), (2, "pv", 21.7, 12.7, 0.0), (3, "pv", 94.2, 19.0, 0.0),
    (4, "pq", 47.8, -3.9, 0.0), (5, "pq", 7.6, 1.6, 0.0), (6, "pv", 11.2, 7.5, 0.0),
    (7, "pq", 0.0, 0.0, 0.0), (8, "pv", 0.0, 0.0, 0.0), (9, "pq", 29.5, 16.6, 19.0),
    (10, "pq", 9.0, 5.8, 0.0), (11, "pq", 3.5, 1.8, 0.0), (12, "pq", 6.1, 1.6, 0.0),
    (13, "pq", 13.5, 5.8, 0.0), (14, "pq", 14.9, 5.0, 0.0),
]
# bus Pg Qmax Qmin Vg Pmax c2 c1 c0
GENS = [
    (1, 232.4, 10.0, 0.0, 1.060, 332.4, 0.0430293, 20.0, 0.0),
    (2, 40.0, 50.0, -40.0, 1.045, 140.0, 0.25, 20.0, 0.0),
    (3, 0.0, 40.0, 0.0, 1.010, 100.0, 0.01, 40.0, 0.0),
    (6, 0.0, 24.0, -6.0, 1.070, 100.0, 0.01, 40.0, 0.0),
    (8, 0.0, 24.0, -6.0, 1.090, 100.0, 0.01, 40.0, 0.0),
]
# synthetic emission curves (a, b, c)
EMISSION = {1: (0.0040, 2.5, 20.0), 2: (0.0050, 2.0, 15.0), 3: (0.0060, 1.8, 10.0),
            6: (0.0045, 2.2, 12.0), 8: (0.0055, 1.9, 11.0)}
# from to r x b [ratio]
BRANCHES = [
    (1, 2, 0.01938, 0.05917, 0.0528), (1, 5, 0.05403, 0.22304, 0.0492),
    (2, 3, 0.04699, 0.19797, 0.0438), (2, 4, 0.05811, 0.17632, 0.0340),
    (2, 5, 0.05695, 0.17388, 0.0346), (3, 4, 0.06701, 0.17103, 0.0128),
    (4, 5, 0.01335, 0.04211, 0.0), (4, 7, 0.0, 0.20912, 0.0, 0.978),
    (4, 9, 0.0, 0.55618, 0.0, 0.969), (5, 6, 0.0, 0.25202, 0.0, 0.932),
    (6, 11, 0.09498, 0.19890, 0.0), (6, 12, 0.12291, 0.25581, 0.0),
    (6, 13, 0.06615, 0.13027, 0.0), (7, 8, 0.0, 0.17615, 0.0),
    (7, 9, 0.0, 0.11001, 0.0), (9, 10, 0.03181, 0.08450, 0.0),
    (9, 14, 0.12711, 0.27038, 0.0), (10, 11, 0.08205, 0.19207, 0.0),
    (12, 13, 0.22092, 0.19988, 0.0), (13, 14, 0.17093, 0.34802, 0.0),
]


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "data"
    buses = []
    for bid, kind, pd, qd, bs in BUSES:
        b = {"id": bid, "kind": kind, "v_min": 0.94, "v_max": 1.10, "u_ref": 1.0,
             "p_load_mw": pd, "q_load_mvar": qd}
        if qd < 0 or pd < 0:
            b["negative_load"] = True
        if bs:
            b["bs_mvar"] = bs
        buses.append(b)
    branches = []
    for row in BRANCHES:
        f, t, r, x, b = row[:5]
        br = {"from": f, "to": t, "r_pu": r, "x_pu": x, "b_pu": b, "s_max_mva": 200.0, "tap": None}
        if len(row) > 5:
            br["ratio"] = row[5]
        branches.append(br)
    gens = []
    for bus, pg, qmax, qmin, vg, pmax, c2, c1, c0 in GENS:
        a, b, c = EMISSION[bus]
        gens.append({"bus": bus, "p_min_mw": 0.0, "p_max_mw": pmax, "q_min_mvar": qmin, "q_max_mvar": qmax,
                     "cost": {"alpha": c2, "beta": c1, "gamma": c0},
                     "emission": {"a": a, "b": b, "c": c}})
    case = {"base_mva": BASE, "buses": buses, "branches": branches, "generators": gens, "shunts": []}
    (out / "ieee14.json").write_text(json.dumps(case, indent=1) + "\n")
    controls = {"p_g_mw": [g[1] for g in GENS[1:]], "u_g_pu": [g[4] for g in GENS], "taps": [], "shunts_mvar": []}
    (out / "ieee14_base_controls.json").write_text(json.dumps(controls, indent=1) + "\n")


if __name__ == "__main__":
    main()
