"""Regenerate src/occulight/data/face_template.csv.

The template is a symmetric 120-point neutral face in meters with the nose
tip (index 0) at the origin and the face looking toward -Z. The file is
committed; this script only documents how it was produced.
"""
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "occulight" / "data" / "face_template.csv"


def depth(x, y):
    # Front of an ellipsoid head with a Gaussian nose bump, shifted so (0, 0) -> 0.
    def surface(x, y):
        q = 1.0 - (x / 0.075) ** 2 - ((y - 0.01) / 0.11) ** 2
        return 0.115 - 0.09 * math.sqrt(max(q, 0.0))

    def bump(x, y):
        return math.exp(-(x ** 2) / (2 * 0.009 ** 2) - (y ** 2) / (2 * 0.022 ** 2))

    s0, b0 = surface(0.0, 0.0), bump(0.0, 0.0)
    return surface(x, y) - s0 * bump(x, y) / b0


def main():
    center = [(0.0, 0.0)]
    # Selected, mirror-paired (right side listed; left is x -> -x).
    brows = [(0.015, 0.045), (0.028, 0.050), (0.041, 0.049), (0.052, 0.043)]
    mouth = [(0.010, -0.037), (0.019, -0.039), (0.026, -0.045),
             (0.019, -0.051), (0.010, -0.054), (0.014, -0.045)]
    cheeks = [(0.040, -0.005), (0.050, -0.020), (0.045, 0.010), (0.035, -0.030)]
    nose_sides = [(0.016, 0.003), (0.010, 0.020)]
    # Unselected filler.
    midline = [(0.0, y) for y in (0.095, 0.075, 0.060, 0.035, 0.018, -0.012, -0.020, -0.070, -0.085)]
    eyes = [(0.032 + 0.013 * math.cos(a), 0.030 + 0.006 * math.sin(a))
            for a in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
    forehead = [(x, y) for x in (0.02, 0.04, 0.06) for y in (0.065, 0.080, 0.095)]
    contour = [(0.072 * math.cos(a), 0.01 + 0.105 * math.sin(a))
               for a in np.linspace(-1.35, 1.35, 12)]
    chin = [(x, y) for x in (0.015, 0.030) for y in (-0.065, -0.080)]
    temples = [(0.065, y) for y in (0.03, 0.0, -0.03)]
    nose = [(0.006, 0.035), (0.008, 0.010), (0.005, -0.008)]

    pts = list(center)
    for group in (brows, mouth, cheeks, nose_sides):
        for x, y in group:
            pts += [(x, y), (-x, y)]
    pts += midline
    for group in (eyes, forehead, contour, chin, temples, nose):
        for x, y in group:
            pts += [(x, y), (-x, y)]
    assert len(pts) == 120, len(pts)
    rows = [(x, y, depth(x, y)) for x, y in pts]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as fh:
        fh.write("index,x,y,z\n")
        for i, (x, y, z) in enumerate(rows):
            fh.write(f"{i},{x:.17g},{y:.17g},{z:.17g}\n")


if __name__ == "__main__":
    main()
