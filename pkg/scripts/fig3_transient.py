"""Relaxation of a five-node complete graph and line graph from the same disturbance."""
from _common import out_dir_from_args, write_table

from drooploss.cli import TransientConfig, transient


def main():
    out = out_dir_from_args(__doc__)
    cfg = TransientConfig()
    columns, rows, extra = transient(cfg)
    summary = extra["summary"]
    write_table(out / "fig3_transient.csv", "transient", cfg, columns, rows, summary)
    for topo, s in summary.items():
        print(f"{topo:>8}: 5% settling {s['settling_time']:.2f} s, cumulative loss {s['cumulative_loss']:.4e}")


if __name__ == "__main__":
    main()
