"""Writes the gyeonggi fixture: 5 scored parks, 54 final candidates and
decoys that the filters remove. Rerun to regenerate; output is stable."""
import csv
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OX, OY = 180000.0, 520000.0
CELL = 100.0
N = 800
R = 300  # range in cells

def center(col, row):
    return (OX + (col + 0.5) * CELL, OY + (row + 0.5) * CELL)

def octile(a, b):
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) - min(dx, dy) + math.sqrt(2) * min(dx, dy)

PARKS = {
    "A": ("Banwol", (381, 376), 71.696, 1107),
    "B": ("Sihwa", (352, 521), 60.89, 3788),
    "C": ("Asan Wojeong", (251, 233), 131.452, 80),
    "D": ("Yongin", (362, 299), 72.081, 44),
    "E": ("Paju Publishing", (517, 674), 73.346, 199),
}
ANCHORS = {
    "AC": (88, 376), "ABC": (104, 408), "AB": (136, 496), "ABD": (152, 496),
    "BE": (224, 672), "E": (272, 792), "D": (488, 56), "AD": (520, 144),
}
SUMS = {
    "0.71853": "AB", "0.297831": "AD", "1.223338": "ABC", "0.797831": "ABD",
    "0.723338": "AC", "0.079301": "D", "0.608961": "BE", "0.108961": "E",
    # Printed sum for two rows that only reach D (3 x 0.079301 = 0.237903).
    "0.237903": "D",
}
CANDIDATES = """E.Gunpo T,213,0.71853
Guseong E,478,0.297831
Dongcheon E,477,0.297831
Gunja T,190,0.71853
Ansan R,125,0.71853
Siheung T,101,0.71853
Jukjeon (S) R,241,0.297831
Mado T,54,1.223338
Songsan Mado T,54,1.223338
Joam T,54,1.223338
Hwaseong (M) R,53,1.223338
Hwaseong (S) R,53,1.223338
N.Suwon T,81,0.797831
W.Seoul T,75,0.71853
W.Ansan T,67,0.71853
Siheung Sky R,61,0.71853
W.Siheung T,49,0.71853
Geumjeong E,34,0.71853
Anseong (S) R,292,0.079301
Maesong T,17,1.223338
Uiwang T,23,0.797831
Icheon (N) R,174,0.079301
Icheon (H) R,174,0.079301
Bugok T,17,0.797831
S.Incheon T,17,0.71853
New Airport T,17,0.608961
Yeongjong Br. R,17,0.608961
Anseong T,65,0.079301
Gonjiam T,63,0.079301
W.Suji T,16,0.297831
S.Anseong T,5,0.71853
Balan T,3,0.723338
W.Anseong T,24,0.079301
Cheongbuk T,2,0.723338
Anseong (M.P) R,16,0.079301
Bibong T,1,1.223338
Anseong (M.J) R,11,0.079301
S.Anseong T,3,0.237903
W.Icheon T,3,0.237903
Goyang T,0,0.108961
S.Gwang myeong T,0,0.71853
S.Gunpo T,0,0.71853
S.Bibong T,0,1.223338
Docheok T,0,0.079301
Dongtan T,0,0.079301
Munhak Tunnel T,0,0.71853
Mulwang T,0,0.71853
W.Yongin T,0,0.079301
Shihwa T,0,0.71853
Yeonseong T,0,0.71853
Ilsan Br. T,0,0.108961
Jungri T,0,0.079301
Cheongna T,0,0.608961
Hwaseong T,0,1.223338"""
TYPES = {"T": "TOLL_GATE", "R": "REST_AREA", "E": "EX_HUB"}

# Constraint regions (cell boxes) kept clear of every reached pair's bbox.
PROHIBITED = (620, 20, 700, 100)
PROHIBITED_HOLE = (650, 50, 670, 70)
CONTROL = [(5, 10), (60, 10), (30, 180)]
ALERT = (10, 720, 60, 790)
HILL = (620, 700, 780, 780)  # DEM cells above threshold, in 100 m cells

OFFSETS = [(dx, dy) for r in range(3) for dx in range(-r, r + 1) for dy in range(-r, r + 1)
           if max(abs(dx), abs(dy)) == r]

def main():
    parks = []
    for key, (name, cell, _, _) in PARKS.items():
        parks.append((key, f"{key}({name})", cell))
    # Decoy parks: two constrained, two without alternative transport.
    parks += [
        ("F", "F(Decoy Prohibited)", (640, 40)),
        ("G", "G(Decoy Highland)", (700, 740)),
        ("H", "H(Decoy Remote)", (760, 400)),
        ("I", "I(Decoy Remote)", (40, 620)),
    ]

    cands = []
    used = {k: 0 for k in ANCHORS}
    for i, line in enumerate(CANDIDATES.splitlines()):
        name, bus, s = line.split(",")
        reach = SUMS[s]
        ax, ay = ANCHORS[reach]
        dx, dy = OFFSETS[used[reach]]
        used[reach] += 1
        cell = (ax + dx, ay + dy)
        got = "".join(k for k in "ABCDE" if octile(cell, PARKS[k][1]) <= R)
        assert got == reach, (name, got, reach)
        for k in "ABCDE":
            assert abs(octile(cell, PARKS[k][1]) - R) > 0.5, (name, k)
        cands.append((f"c{i + 1:02d}", name, TYPES[name[-1]], cell, int(bus)))
    decoys = [
        ("x01", "Decoy Prohibited T", "TOLL_GATE", (630, 30), 40),
        ("x02", "Decoy Control T", "TOLL_GATE", (20, 30), 12),
        ("x03", "Decoy Highland R", "REST_AREA", (720, 760), 8),
        ("x04", "Decoy Remote T", "TOLL_GATE", (780, 300), 30),
        ("x05", "Decoy Remote R", "REST_AREA", (700, 500), 22),
        ("x06", "Decoy Remote E", "EX_HUB", (20, 560), 90),
    ]

    # Keep constraint regions clear of the bboxes of all reached pairs.
    def hits(box):
        c0, r0, c1, r1 = box
        for _, _, _, cell, _ in cands:
            for k in "ABCDE":
                p = PARKS[k][1]
                if octile(cell, p) > R:
                    continue
                b = (min(cell[0], p[0]) - 3, min(cell[1], p[1]) - 3, max(cell[0], p[0]) + 3, max(cell[1], p[1]) + 3)
                if not (c1 < b[0] or c0 > b[2] or r1 < b[1] or r0 > b[3]):
                    return True
        return False
    for box in (PROHIBITED, ALERT, HILL, (5, 10, 60, 180)):
        assert not hits(box), box

    def xy(cell, fx=0.5, fy=0.5):
        return (OX + (cell[0] + fx) * CELL, OY + (cell[1] + fy) * CELL)

    def fmt(v):
        return repr(round(v, 3))

    with open(os.path.join(HERE, "facilities.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "name", "type", "x_m", "y_m", "num_bus_routes"])
        for cid, name, typ, cell, bus in cands + decoys:
            x, y = xy(cell, 0.3, 0.6)
            w.writerow([cid, name, typ, fmt(x), fmt(y), bus])

    with open(os.path.join(HERE, "destinations.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "name", "x_m", "y_m"])
        for key, name, cell in parks:
            x, y = xy(cell)
            w.writerow([key, name, fmt(x), fmt(y)])

    # One alternative node 200-350 m from every site meant to survive.
    alt = []
    survivors = [(c[3]) for c in cands] + [p[2] for p in parks[:5]] + [(630, 30), (20, 30), (720, 760), (640, 40), (700, 740)]
    for i, cell in enumerate(survivors):
        x, y = xy(cell, 0.3, 0.6)
        kind = "SUBWAY" if i % 3 == 0 else "TAXI_ROAD"
        alt.append((f"alt{i + 1:03d}", kind, x + 200.0 + (i % 4) * 50.0, y))
    remote = [xy(c[3], 0.3, 0.6) for c in decoys[3:]] + [xy(p[2]) for p in parks[7:]]
    for a in alt:
        for r in remote:
            assert math.hypot(a[2] - r[0], a[3] - r[1]) > 450.0
    with open(os.path.join(HERE, "alt_nodes.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "kind", "x_m", "y_m"])
        for a in alt:
            w.writerow([a[0], a[1], fmt(a[2]), fmt(a[3])])

    # Three nearest nodes per park (one per mode) plus farther decoys.
    nodes, times, ods = [], [], []
    modes = ["BUS", "RAIL", "SUBWAY"]
    tf = ["MORNING_PEAK", "EVENING_PEAK", "OFF_PEAK"]
    for pi, (key, (_, cell, t_total, od_total)) in enumerate(PARKS.items()):
        px, py = xy(cell)
        t1 = round(t_total * 0.25, 3)
        t2 = round(t_total * 0.35, 3)
        t3 = round(t_total - t1 - t2, 3)
        assert abs((t1 + t2 + t3) - t_total) < 1e-9
        split = [t1, t2, t3]
        per = []
        base = od_total // 9
        rest = od_total - base * 9
        for j in range(9):
            per.append(base + (1 if j < rest else 0))
        assert sum(per) == od_total
        for mi, mode in enumerate(modes):
            nid = f"{key}-{mode[0]}1"
            nodes.append((nid, mode, px + 300.0 * (mi + 1), py + 100.0))
            times.append((key, nid, split[mi]))
            for ti, t in enumerate(tf):
                ods.append((key, nid, t, per[mi * 3 + ti]))
            did = f"{key}-{mode[0]}2"
            nodes.append((did, mode, px - 2500.0, py - 1500.0 * (mi + 1)))
            times.append((key, did, round(split[mi] + 17.5, 3)))
            for t in tf:
                ods.append((key, did, t, 500))
    with open(os.path.join(HERE, "transport_nodes.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "mode", "x_m", "y_m"])
        for n in nodes:
            w.writerow([n[0], n[1], fmt(n[2]), fmt(n[3])])
    with open(os.path.join(HERE, "travel_times.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["dest_id", "node_id", "minutes"])
        for t in times:
            w.writerow([t[0], t[1], repr(t[2])])
    with open(os.path.join(HERE, "od.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["dest_id", "node_id", "timeframe", "volume"])
        for o in ods:
            w.writerow(list(o))

    def ring(box):
        c0, r0, c1, r1 = box
        return [list(xy((c0, r0), 0, 0)), list(xy((c1, r0), 0, 0)), list(xy((c1, r1), 0, 0)),
                list(xy((c0, r1), 0, 0)), list(xy((c0, r0), 0, 0))]
    def tri(pts):
        r = [list(xy(p, 0, 0)) for p in pts]
        return r + [r[0]]
    features = [
        {"type": "Feature", "properties": {"category": "Prohibited Area", "name": "P-1"},
         "geometry": {"type": "Polygon", "coordinates": [ring(PROHIBITED), ring(PROHIBITED_HOLE)]}},
        {"type": "Feature", "properties": {"category": "Control Zone", "name": "CZ-1"},
         "geometry": {"type": "Polygon", "coordinates": [tri(CONTROL)]}},
        {"type": "Feature", "properties": {"category": "Alert Area", "name": "AA-1"},
         "geometry": {"type": "MultiPolygon", "coordinates": [[ring(ALERT)]]}},
    ]
    with open(os.path.join(HERE, "constraints.geojson"), "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")

    # 1 km DEM; cells inside HILL sit above the 300 m threshold.
    with open(os.path.join(HERE, "dem.asc"), "w") as f:
        f.write(f"ncols 80\nnrows 80\nxllcorner {OX}\nyllcorner {OY}\ncellsize 1000\nNODATA_value -9999\n")
        for r in range(79, -1, -1):
            row = []
            for c in range(80):
                inside = HILL[0] <= c * 10 + 5 <= HILL[2] and HILL[1] <= r * 10 + 5 <= HILL[3]
                if (c, r) == (2, 2):
                    row.append("-9999")
                else:
                    row.append("420" if inside else str(40 + (c + r) % 7 * 10))
            f.write(" ".join(row) + "\n")

    manifest = {
        "name": "gyeonggi",
        "extent": {"origin_x": OX, "origin_y": OY, "width_m": N * CELL, "height_m": N * CELL},
        "facilities": "facilities.csv",
        "destinations": "destinations.csv",
        "constraints": ["constraints.geojson"],
        "dem": "dem.asc",
        "alt_nodes": "alt_nodes.csv",
        "transport_nodes": "transport_nodes.csv",
        "travel_times": "travel_times.csv",
        "od": "od.csv",
        "travel_time_provider": {"kind": "file"},
        "parameters": {"gamma": 0.5, "buffer_m": 450, "range_km": 30, "cell_m": 100,
                       "dem_threshold_m": 300, "top_k": 10},
    }
    with open(os.path.join(HERE, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

if __name__ == "__main__":
    main()
