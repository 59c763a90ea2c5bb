"""Topology surgery: one model, changing number of curves.

Three canonical scenes plus a random vessel tree:
  split   - one big ring deflates around two separate disks and pinches off
  merge   - two small rings inflate inside one disk and fuse
  annulus - an outer ring and a hole ring lock onto both ring boundaries
  vessels - one seed per bright component of a random stroke image

Final SVGs land in demos/output/topology.

Run: python3 demos/04_topology_scenes.py
"""

from pathlib import Path

from riemsnake.experiments import DEFAULT_CONFIG, run_topology


def main():
    out = Path(__file__).parent / "output" / "topology"
    results = run_topology(out, dict(DEFAULT_CONFIG))
    for r in results:
        ok = "ok " if r["n_curves"] == r["expected"] else "FAIL"
        print(f"{ok} {r['scene']:8s} {r['n_curves']} curves "
              f"(expected {r['expected']}), {r['iterations']} iterations")
    print(f"SVGs in {out}")


if __name__ == "__main__":
    main()
