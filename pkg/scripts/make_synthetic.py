#!/usr/bin/env python3
"""Emit seeded synthetic concert and city CSVs for experiments and demos."""

import argparse
from pathlib import Path

from concertml.city_cluster import write_city_csv
from concertml.data_model import write_csv
from concertml.evaluation import SyntheticSpec, generate_cities, generate_synthetic


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--noise", type=float, default=0.2,
                        help="label noise probability")
    parser.add_argument("--price-genre-scale", type=float, default=0.0)
    parser.add_argument("--price-day-scale", type=float, default=0.0)
    parser.add_argument("--cities", type=int, default=120)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("data"))
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(
        n_rows=args.rows,
        label_noise=args.noise,
        price_genre_scale=args.price_genre_scale,
        price_day_scale=args.price_day_scale,
        seed=args.seed,
    )
    data = generate_synthetic(spec)
    concerts = args.out_dir / "concerts.csv"
    write_csv(data.table, concerts)

    cities = args.out_dir / "cities.csv"
    write_city_csv(generate_cities(args.cities, seed=args.seed), cities)
    print(f"wrote {args.rows} concerts -> {concerts}")
    print(f"wrote {args.cities} cities  -> {cities}")


if __name__ == "__main__":
    main()
