"""Write random instances as JSON files, one per instance, for ``wshsa sweep``."""

import argparse
from pathlib import Path

from wshsa.corpus import random_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out_dir", type=Path)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-users", type=int, default=6)
    p.add_argument("--max-relays", type=int, default=3)
    args = p.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    corpus = random_corpus(args.seed, args.count, max_users=args.max_users,
                           max_relays=args.max_relays)
    for i, inst in enumerate(corpus):
        (args.out_dir / f"random_{i:03d}.json").write_text(inst.dumps() + "\n")
    print(f"wrote {len(corpus)} instances to {args.out_dir}")


if __name__ == "__main__":
    main()
