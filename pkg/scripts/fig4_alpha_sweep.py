"""Relative error of the decoupled loss norm against alpha, N = 50, with the series prediction."""
from _common import out_dir_from_args, write_table

from drooploss.cli import AlphaSweepConfig, alpha_sweep


def main():
    out = out_dir_from_args(__doc__)
    cfg = AlphaSweepConfig()
    columns, rows, summary = alpha_sweep(cfg)
    write_table(out / "fig4_alpha_sweep.csv", "alpha-sweep", cfg, columns, rows, summary)
    print({k: v for k, v in summary.items() if k.startswith("slope")})


if __name__ == "__main__":
    main()
