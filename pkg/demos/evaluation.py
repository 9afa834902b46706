"""Score the tiered ranking and nine aggregation strategies against the
bundled popularity list, for several group sizes.

    python demos/evaluation.py
"""

from gcpref.workbench import bundled, evaluate, open_dataset, read_ground_truth


def main():
    data = open_dataset("restaurants_mini")
    truth = read_ground_truth((bundled("restaurants_mini") / "ground_truth.txt").read_text())
    rows = evaluate(data, truth, ks=(5, 10), group_sizes=[2, 4, 8, 12], n_groups=20, seed=0)
    print(f"{'method':<16}{'|G|':>4}{'k':>4}{'precision':>11}{'footrule':>10}")
    for r in sorted(rows, key=lambda r: (r["k"], r["group_size"], -r["precision"])):
        print(f"{r['strategy']:<16}{r['group_size']:>4}{r['k']:>4}{r['precision']:>11.3f}{r['footrule']:>10.3f}")


if __name__ == "__main__":
    main()
