"""One discrete flow: the full square shrinks onto a disk obstacle.

Prints volume and largest boundary displacement per step, then the
displacement of the first steps across a sweep of time steps (~ sqrt(h)).

    python demos/shrinking_square.py
"""
from mchull.grid import measure
from mchull.verify import check_displacement, displacement_scene, sweep


def main(n=128):
    obstacle, stencil = displacement_scene(n)
    dx = obstacle.spec.spacing
    trs = sweep(obstacle, stencil, [h * dx * dx for h in (256, 128, 64, 32)])
    tr = trs[1]
    print(f"h = 128 dx^2, {len(tr.steps)} steps, stationary={tr.stationary}")
    for s in tr.steps[:12]:
        print(f"  step {s.i:3d} volume={measure(s.set):.4f} "
              f"max displacement={s.max_displacement / dx:.1f}dx")
    rep = check_displacement(trs)
    print(f"fitted exponent {rep.fitted['exponent']:.3f} (r^2 {rep.fitted['r_squared']:.3f})")


if __name__ == "__main__":
    main()
