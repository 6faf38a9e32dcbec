#!/usr/bin/env python3
"""Generate data/ieee118.json and data/ieee118_base_controls.json.

Network data is the standard IEEE 118-bus test system (MATPOWER case118 layout),
transcribed by hand. Modelling choices for the many-objective OPF study:

* The 14 dispatchable units (buses 10, 12, 25, 26, 49, 54, 59, 61, 65, 66, 69,
  80, 89, 100) are generators; bus 69 is the slack.
* The remaining 40 PV units of case118 (synchronous condensers and small units)
  become PQ buses; their scheduled active output enters as a negative load.
* Buses carrying positive fixed shunts in case118 become switchable
  compensators with range [0, 50] MVAr and 1 MVAr steps; reactors stay fixed.
* The 9 transformers are the adjustable taps, range [0.9, 1.1], step 0.0125.
* Branch rating 500 MVA (above the heaviest base-case flow, 458 MVA on 8-9, so the
  published dispatch is within limits); voltage bounds [0.95, 1.10] p.u.
* Cost coefficients are the case118 quadratic gencost rows. Emission
  coefficients are synthetic placeholders (see data/README.md).
"""
import json
import os

# bus_i type Pd Qd Bs Vm
BUSES = """
1 2 51 27 0 0.955
2 1 20 9 0 0.971
3 1 39 10 0 0.968
4 2 39 12 0 0.998
5 1 0 0 -40 1.002
6 2 52 22 0 0.99
7 1 19 2 0 0.989
8 2 28 0 0 1.015
9 1 0 0 0 1.043
10 2 0 0 0 1.05
11 1 70 23 0 0.985
12 2 47 10 0 0.99
13 1 34 16 0 0.968
14 1 14 1 0 0.984
15 2 90 30 0 0.97
16 1 25 10 0 0.984
17 1 11 3 0 0.995
18 2 60 34 0 0.973
19 2 45 25 0 0.963
20 1 18 3 0 0.958
21 1 14 8 0 0.959
22 1 10 5 0 0.97
23 1 7 3 0 1
24 2 13 0 0 0.992
25 2 0 0 0 1.05
26 2 0 0 0 1.015
27 2 71 13 0 0.968
28 1 17 7 0 0.962
29 1 24 4 0 0.963
30 1 0 0 0 0.968
31 2 43 27 0 0.967
32 2 59 23 0 0.964
33 1 23 9 0 0.972
34 2 59 26 14 0.986
35 1 33 9 0 0.981
36 2 31 17 0 0.98
37 1 0 0 -25 0.992
38 1 0 0 0 0.962
39 1 27 11 0 0.97
40 2 66 23 0 0.97
41 1 37 10 0 0.967
42 2 96 23 0 0.985
43 1 18 7 0 0.978
44 1 16 8 10 0.985
45 1 53 22 10 0.987
46 2 28 10 10 1.005
47 1 34 0 0 1.017
48 1 20 11 15 1.021
49 2 87 30 0 1.025
50 1 17 4 0 1.001
51 1 17 8 0 0.967
52 1 18 5 0 0.957
53 1 23 11 0 0.946
54 2 113 32 0 0.955
55 2 63 22 0 0.952
56 2 84 18 0 0.954
57 1 12 3 0 0.971
58 1 12 3 0 0.959
59 2 277 113 0 0.985
60 1 78 3 0 0.993
61 2 0 0 0 0.995
62 2 77 14 0 0.998
63 1 0 0 0 0.969
64 1 0 0 0 0.984
65 2 0 0 0 1.005
66 2 39 18 0 1.05
67 1 28 7 0 1.02
68 1 0 0 0 1.003
69 3 0 0 0 1.035
70 2 66 20 0 0.984
71 1 0 0 0 0.987
72 2 12 0 0 0.98
73 2 6 0 0 0.991
74 2 68 27 12 0.958
75 1 47 11 0 0.967
76 2 68 36 0 0.943
77 2 61 28 0 1.006
78 1 71 26 0 1.003
79 1 39 32 20 1.009
80 2 130 26 0 1.04
81 1 0 0 0 0.997
82 1 54 27 20 0.989
83 1 20 10 10 0.985
84 1 11 7 0 0.98
85 2 24 15 0 0.985
86 1 21 10 0 0.987
87 2 0 0 0 1.015
88 1 48 10 0 0.987
89 2 0 0 0 1.005
90 2 163 42 0 0.985
91 2 10 0 0 0.98
92 2 65 10 0 0.993
93 1 12 7 0 0.987
94 1 30 16 0 0.991
95 1 42 31 0 0.981
96 1 38 15 0 0.993
97 1 15 9 0 1.011
98 1 34 8 0 1.024
99 2 42 0 0 1.01
100 2 37 18 0 1.017
101 1 22 15 0 0.993
102 1 5 3 0 0.991
103 2 23 16 0 1.001
104 2 38 25 0 0.971
105 2 31 26 20 0.965
106 1 43 16 0 0.962
107 2 50 12 6 0.952
108 1 2 1 0 0.967
109 1 8 3 0 0.967
110 2 39 30 6 0.973
111 2 0 0 0 0.98
112 2 68 13 0 0.975
113 2 6 0 0 0.993
114 1 8 3 0 0.96
115 1 22 7 0 0.96
116 2 184 0 0 1.005
117 1 20 8 0 0.974
118 1 33 15 0 0.949
"""

# bus Pg Qmax Qmin Vg Pmax Pmin c2 c1 c0
GENS = """
1 0 15 -5 0.955 100 0 0.01 40 0
4 0 300 -300 0.998 100 0 0.01 40 0
6 0 50 -13 0.99 100 0 0.01 40 0
8 0 300 -300 1.015 100 0 0.01 40 0
10 450 200 -147 1.05 550 0 0.0222222 20 0
12 85 120 -35 0.99 185 0 0.117647 20 0
15 0 30 -10 0.97 100 0 0.01 40 0
18 0 50 -16 0.973 100 0 0.01 40 0
19 0 24 -8 0.962 100 0 0.01 40 0
24 0 300 -300 0.992 100 0 0.01 40 0
25 220 140 -47 1.05 320 0 0.0454545 20 0
26 314 1000 -1000 1.015 414 0 0.0318471 20 0
27 0 300 -300 0.968 100 0 0.01 40 0
31 7 300 -300 0.967 107 0 1.42857 20 0
32 0 42 -14 0.963 100 0 0.01 40 0
34 0 24 -8 0.984 100 0 0.01 40 0
36 0 24 -8 0.98 100 0 0.01 40 0
40 0 300 -300 0.97 100 0 0.01 40 0
42 0 300 -300 0.985 100 0 0.01 40 0
46 19 100 -100 1.005 119 0 0.526316 20 0
49 204 210 -85 1.025 304 0 0.0490196 20 0
54 48 300 -300 0.955 148 0 0.208333 20 0
55 0 23 -8 0.952 100 0 0.01 40 0
56 0 15 -8 0.954 100 0 0.01 40 0
59 155 180 -60 0.985 255 0 0.0645161 20 0
61 160 300 -100 0.995 260 0 0.0625 20 0
62 0 20 -20 0.998 100 0 0.01 40 0
65 391 200 -67 1.005 491 0 0.0255754 20 0
66 392 200 -67 1.05 492 0 0.0255102 20 0
69 516.4 300 -300 1.035 805.2 0 0.0193648 20 0
70 0 32 -10 0.984 100 0 0.01 40 0
72 0 100 -100 0.98 100 0 0.01 40 0
73 0 100 -100 0.991 100 0 0.01 40 0
74 0 9 -6 0.958 100 0 0.01 40 0
76 0 23 -8 0.943 100 0 0.01 40 0
77 0 70 -20 1.006 100 0 0.01 40 0
80 477 280 -165 1.04 577 0 0.0209644 20 0
85 0 23 -8 0.985 100 0 0.01 40 0
87 4 1000 -100 1.015 104 0 2.5 20 0
89 607 300 -210 1.005 707 0 0.0164745 20 0
90 0 300 -300 0.985 100 0 0.01 40 0
91 0 100 -100 0.98 100 0 0.01 40 0
92 0 9 -3 0.99 100 0 0.01 40 0
99 0 100 -100 1.01 100 0 0.01 40 0
100 252 155 -50 1.017 352 0 0.0396825 20 0
103 40 40 -15 1.01 140 0 0.25 20 0
104 0 23 -8 0.971 100 0 0.01 40 0
105 0 23 -8 0.965 100 0 0.01 40 0
107 0 200 -200 0.952 100 0 0.01 40 0
110 0 23 -8 0.973 100 0 0.01 40 0
111 36 1000 -100 0.98 136 0 0.277778 20 0
112 0 1000 -100 0.975 100 0 0.01 40 0
113 0 200 -100 0.993 100 0 0.01 40 0
116 0 1000 -1000 1.005 100 0 0.01 40 0
"""

# fbus tbus r x b [ratio]
BRANCHES = """
1 2 0.0303 0.0999 0.0254
1 3 0.0129 0.0424 0.01082
4 5 0.00176 0.00798 0.0021
3 5 0.0241 0.108 0.0284
5 6 0.0119 0.054 0.01426
6 7 0.00459 0.0208 0.0055
8 9 0.00244 0.0305 1.162
8 5 0 0.0267 0 0.985
9 10 0.00258 0.0322 1.23
4 11 0.0209 0.0688 0.01748
5 11 0.0203 0.0682 0.01738
11 12 0.00595 0.0196 0.00502
2 12 0.0187 0.0616 0.01572
3 12 0.0484 0.16 0.0406
7 12 0.00862 0.034 0.00874
11 13 0.02225 0.0731 0.01876
12 14 0.0215 0.0707 0.01816
13 15 0.0744 0.2444 0.06268
14 15 0.0595 0.195 0.0502
12 16 0.0212 0.0834 0.0214
15 17 0.0132 0.0437 0.0444
16 17 0.0454 0.1801 0.0466
17 18 0.0123 0.0505 0.01298
18 19 0.01119 0.0493 0.01142
19 20 0.0252 0.117 0.0298
15 19 0.012 0.0394 0.0101
20 21 0.0183 0.0849 0.0216
21 22 0.0209 0.097 0.0246
22 23 0.0342 0.159 0.0404
23 24 0.0135 0.0492 0.0498
23 25 0.0156 0.08 0.0864
26 25 0 0.0382 0 0.96
25 27 0.0318 0.163 0.1764
27 28 0.01913 0.0855 0.0216
28 29 0.0237 0.0943 0.0238
30 17 0 0.0388 0 0.96
8 30 0.00431 0.0504 0.514
26 30 0.00799 0.086 0.908
17 31 0.0474 0.1563 0.0399
29 31 0.0108 0.0331 0.0083
23 32 0.0317 0.1153 0.1173
31 32 0.0298 0.0985 0.0251
27 32 0.0229 0.0755 0.01926
15 33 0.038 0.1244 0.03194
19 34 0.0752 0.247 0.0632
35 36 0.00224 0.0102 0.00268
35 37 0.011 0.0497 0.01318
33 37 0.0415 0.142 0.0366
34 36 0.00871 0.0268 0.00568
34 37 0.00256 0.0094 0.00984
38 37 0 0.0375 0 0.935
37 39 0.0321 0.106 0.027
37 40 0.0593 0.168 0.042
30 38 0.00464 0.054 0.422
39 40 0.0184 0.0605 0.01552
40 41 0.0145 0.0487 0.01222
40 42 0.0555 0.183 0.0466
41 42 0.041 0.135 0.0344
43 44 0.0608 0.2454 0.06068
34 43 0.0413 0.1681 0.04226
44 45 0.0224 0.0901 0.0224
45 46 0.04 0.1356 0.0332
46 47 0.038 0.127 0.0316
46 48 0.0601 0.189 0.0472
47 49 0.0191 0.0625 0.01604
42 49 0.0715 0.323 0.086
42 49 0.0715 0.323 0.086
45 49 0.0684 0.186 0.0444
48 49 0.0179 0.0505 0.01258
49 50 0.0267 0.0752 0.01874
49 51 0.0486 0.137 0.0342
51 52 0.0203 0.0588 0.01396
52 53 0.0405 0.1635 0.04058
53 54 0.0263 0.122 0.031
49 54 0.073 0.289 0.0738
49 54 0.0869 0.291 0.073
54 55 0.0169 0.0707 0.0202
54 56 0.00275 0.00955 0.00732
55 56 0.00488 0.0151 0.00374
56 57 0.0343 0.0966 0.0242
50 57 0.0474 0.134 0.0332
56 58 0.0343 0.0966 0.0242
51 58 0.0255 0.0719 0.01788
54 59 0.0503 0.2293 0.0598
56 59 0.0825 0.251 0.0569
56 59 0.0803 0.239 0.0536
55 59 0.04739 0.2158 0.05646
59 60 0.0317 0.145 0.0376
59 61 0.0328 0.15 0.0388
60 61 0.00264 0.0135 0.01456
60 62 0.0123 0.0561 0.01468
61 62 0.00824 0.0376 0.0098
63 59 0 0.0386 0 0.96
63 64 0.00172 0.02 0.216
64 61 0 0.0268 0 0.985
38 65 0.00901 0.0986 1.046
64 65 0.00269 0.0302 0.38
49 66 0.018 0.0919 0.0248
49 66 0.018 0.0919 0.0248
62 66 0.0482 0.218 0.0578
62 67 0.0258 0.117 0.031
65 66 0 0.037 0 0.935
66 67 0.0224 0.1015 0.02682
65 68 0.00138 0.016 0.638
47 69 0.0844 0.2778 0.07092
49 69 0.0985 0.324 0.0828
68 69 0 0.037 0 0.935
69 70 0.03 0.127 0.122
24 70 0.00221 0.4115 0.10198
70 71 0.00882 0.0355 0.00878
24 72 0.0488 0.196 0.0488
71 72 0.0446 0.18 0.04444
71 73 0.00866 0.0454 0.01178
70 74 0.0401 0.1323 0.03368
70 75 0.0428 0.141 0.036
69 75 0.0405 0.122 0.124
74 75 0.0123 0.0406 0.01034
76 77 0.0444 0.148 0.0368
69 77 0.0309 0.101 0.1038
75 77 0.0601 0.1999 0.04978
77 78 0.00376 0.0124 0.01264
78 79 0.00546 0.0244 0.00648
77 80 0.017 0.0485 0.0472
77 80 0.0294 0.105 0.0228
79 80 0.0156 0.0704 0.0187
68 81 0.00175 0.0202 0.808
81 80 0 0.037 0 0.935
77 82 0.0298 0.0853 0.08174
82 83 0.0112 0.03665 0.03796
83 84 0.0625 0.132 0.0258
83 85 0.043 0.148 0.0348
84 85 0.0302 0.0641 0.01234
85 86 0.035 0.123 0.0276
86 87 0.02828 0.2074 0.0445
85 88 0.02 0.102 0.0276
85 89 0.0239 0.173 0.047
88 89 0.0139 0.0712 0.01934
89 90 0.0518 0.188 0.0528
89 90 0.0238 0.0997 0.106
90 91 0.0254 0.0836 0.0214
89 92 0.0099 0.0505 0.0548
89 92 0.0393 0.1581 0.0414
91 92 0.0387 0.1272 0.03268
92 93 0.0258 0.0848 0.0218
92 94 0.0481 0.158 0.0406
93 94 0.0223 0.0732 0.01876
94 95 0.0132 0.0434 0.0111
80 96 0.0356 0.182 0.0494
82 96 0.0162 0.053 0.0544
94 96 0.0269 0.0869 0.023
80 97 0.0183 0.0934 0.0254
80 98 0.0238 0.108 0.0286
80 99 0.0454 0.206 0.0546
92 100 0.0648 0.295 0.0472
94 100 0.0178 0.058 0.0604
95 96 0.0171 0.0547 0.01474
96 97 0.0173 0.0885 0.024
98 100 0.0397 0.179 0.0476
99 100 0.018 0.0813 0.0216
100 101 0.0277 0.1262 0.0328
92 102 0.0123 0.0559 0.01464
101 102 0.0246 0.112 0.0294
100 103 0.016 0.0525 0.0536
100 104 0.0451 0.204 0.0541
103 104 0.0466 0.1584 0.0407
103 105 0.0535 0.1625 0.0408
100 106 0.0605 0.229 0.062
104 105 0.00994 0.0378 0.00986
105 106 0.014 0.0547 0.01434
105 107 0.053 0.183 0.0472
105 108 0.0261 0.0703 0.01844
106 107 0.053 0.183 0.0472
108 109 0.0105 0.0288 0.0076
103 110 0.03906 0.1813 0.0461
109 110 0.0278 0.0762 0.0202
110 111 0.022 0.0755 0.02
110 112 0.0247 0.064 0.062
17 113 0.00913 0.0301 0.00768
32 113 0.0615 0.203 0.0518
32 114 0.0135 0.0612 0.01628
27 115 0.0164 0.0741 0.01972
114 115 0.0023 0.0104 0.00276
68 116 0.00034 0.00405 0.164
12 117 0.0329 0.14 0.0358
75 118 0.0145 0.0481 0.01198
76 118 0.0164 0.0544 0.01356
"""

ACTIVE = [10, 12, 25, 26, 49, 54, 59, 61, 65, 66, 69, 80, 89, 100]

# Synthetic emission coefficients (lb/h with P in MW): a [lb/MW^2 h], b [lb/MWh], c [lb/h].
# Chosen so the emission-optimal dispatch differs from the cost-optimal one.
EMISSION = {
    10: (0.0020, 6.2, 120.0),
    12: (0.0045, 3.1, 60.0),
    25: (0.0030, 5.8, 90.0),
    26: (0.0025, 6.0, 100.0),
    49: (0.0035, 4.2, 80.0),
    54: (0.0060, 2.8, 50.0),
    59: (0.0040, 3.9, 70.0),
    61: (0.0040, 4.0, 70.0),
    65: (0.0018, 6.5, 130.0),
    66: (0.0018, 6.4, 130.0),
    69: (0.0015, 6.8, 150.0),
    80: (0.0019, 6.3, 125.0),
    89: (0.0016, 6.6, 140.0),
    100: (0.0032, 4.5, 85.0),
}

BRANCH_RATING_MVA = 500.0
SHUNT_QMAX_MVAR = 50.0
SHUNT_STEP_MVAR = 1.0


def rows(text):
    return [line.split() for line in text.strip().splitlines()]


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    out_dir = os.path.join(here, "..", "data")

    gens = {int(r[0]): r for r in rows(GENS)}
    buses, shunts, base_shunts = [], [], []
    for r in rows(BUSES):
        bid, btype = int(r[0]), int(r[1])
        pd, qd, bs = float(r[2]), float(r[3]), float(r[4])
        kind = {1: "pq", 2: "pv", 3: "slack"}[btype]
        neg = False
        if kind == "pv" and bid not in ACTIVE:
            kind = "pq"
            pg = float(gens[bid][1])
            if pg != 0.0:
                pd -= pg
                neg = pd < 0
        bus = {"id": bid, "kind": kind, "v_min": 0.95, "v_max": 1.10, "u_ref": 1.0,
               "p_load_mw": pd, "q_load_mvar": qd}
        if neg:
            bus["negative_load"] = True
        if bs < 0:
            bus["bs_mvar"] = bs
        elif bs > 0:
            shunts.append({"bus": bid, "q_min_mvar": 0.0, "q_max_mvar": SHUNT_QMAX_MVAR,
                           "step_mvar": SHUNT_STEP_MVAR})
            base_shunts.append(bs)
        buses.append(bus)

    branches, base_taps = [], []
    for r in rows(BRANCHES):
        br = {"from": int(r[0]), "to": int(r[1]), "r_pu": float(r[2]), "x_pu": float(r[3]),
              "b_pu": float(r[4]), "s_max_mva": BRANCH_RATING_MVA, "tap": None}
        if len(r) > 5:
            br["tap"] = {"t_min": 0.9, "t_max": 1.1, "step": 0.0125}
            ratio = float(r[5])
            base_taps.append(round(round((ratio - 0.9) / 0.0125) * 0.0125 + 0.9, 6))
        branches.append(br)

    generators, base_p, base_v = [], [], []
    for bid in ACTIVE:
        g = gens[bid]
        a, b, c = EMISSION[bid]
        generators.append({
            "bus": bid, "p_min_mw": float(g[6]), "p_max_mw": float(g[5]),
            "q_min_mvar": float(g[3]), "q_max_mvar": float(g[2]),
            "cost": {"alpha": float(g[7]), "beta": float(g[8]), "gamma": float(g[9])},
            "emission": {"a": a, "b": b, "c": c}})
        if bid != 69:
            base_p.append(float(g[1]))
        base_v.append(float(g[4]))

    case = {"base_mva": 100.0, "buses": buses, "branches": branches,
            "generators": generators, "shunts": shunts}
    controls = {"p_g_mw": base_p, "u_g_pu": base_v, "taps": base_taps,
                "shunts_mvar": base_shunts}
    with open(os.path.join(out_dir, "ieee118.json"), "w") as f:
        json.dump(case, f, indent=1)
        f.write("\n")
    with open(os.path.join(out_dir, "ieee118_base_controls.json"), "w") as f:
        json.dump(controls, f, indent=1)
        f.write("\n")
    print(len(buses), "buses,", len(branches), "branches,", len(generators), "generators,",
          len(shunts), "shunts,", len(base_taps), "taps")


if __name__ == "__main__":
    main()
