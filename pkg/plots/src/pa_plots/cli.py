"""Command-line entry point: render one figure kind from one CSV artifact."""
from __future__ import annotations

from pathlib import Path

import click

from . import __version__
from .render import KINDS, PlotSpec, SchemaError
from .render import render as render_figure


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Figures from pooled-annuity CLI artifacts."""


@main.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("--in", "input_csv", type=click.Path(), required=True, help="Input CSV artifact.")
@click.option("--out", type=click.Path(), required=True, help="Output .png or .svg path.")
def render(kind: str, input_csv: str, out: str) -> None:
    """Render one figure; the CSV's manifest must carry the same kind."""
    spec = PlotSpec(input_csv=Path(input_csv), kind=kind, output_image=Path(out))
    try:
        path = render_figure(spec)
    except SchemaError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
