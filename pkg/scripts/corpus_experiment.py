"""Full author-dependency run over a local corpus: profiles, fits, distances, margins, scorecard.

The corpus directory holds ``authors.csv`` (text_id,author,path) and a
lexicon, e.g. a cmudict file::

    python scripts/corpus_experiment.py corpus/ --lexicon corpus/cmudict.dict --out results/corpus
"""

import argparse
import sys
import time
from pathlib import Path

from phonostat import io as pio
from phonostat.cli import main as cli


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("corpus", type=Path)
    parser.add_argument("--lexicon", type=Path)
    parser.add_argument("--out", type=Path, default=Path("results/corpus"))
    parser.add_argument("--jobs", type=int, default=4)
    args = parser.parse_args()

    lexicon = args.lexicon or next(iter(sorted(args.corpus.glob("*.dict")) + sorted(args.corpus.glob("*.tsv"))))
    common = ["--lexicon", str(lexicon), "--authors", str(args.corpus / "authors.csv"),
              "--out", str(args.out), "--jobs", str(args.jobs)]
    modes = ["--mode", "all", "--mode", "types", "--mode", "exclusive-types"]
    status = 0
    for command, extra in (("profile", []), ("fit", ["--mode", "all", "--mode", "types"]),
                           ("distance", modes), ("cluster", modes)):
        start = time.perf_counter()
        code = cli([command, *common, *extra])
        print(f"{command:9s} exit {code}  {time.perf_counter() - start:6.1f} s")
        status = max(status, code)
        if code == 2:
            return code

    for mode in ("all", "types"):
        print(f"\nfitted beta ({mode}):")
        for row in pio.read_csv(args.out / f"fits_{mode}.csv"):
            print(f"  {row['text_id']:12s} {row['author']:10s} beta={float(row['beta']):.3f} "
                  f"R2={float(row['r_squared']):.4f}")
    print("\nscorecard:")
    for row in pio.read_csv(args.out / "scorecard_summary.csv"):
        print(f"  {row['holds']:>2s}/{row['total']:<2s} {row['description']}")
    return status


if __name__ == "__main__":
    sys.exit(main())
