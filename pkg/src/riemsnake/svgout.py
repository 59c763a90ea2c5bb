"""SVG snapshots of snake geometry for auditing runs without a plotting stack."""

from __future__ import annotations

__all__ = ["model_to_svg", "write_svg"]

_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def model_to_svg(model, image_ref: str | None = None) -> str:
    """Serialize every curve as a closed polyline over the image rectangle.

    ``image_ref`` adds a sidecar reference (a comment naming the underlay PGM)
    rather than embedding pixel data.
    """
    w, h = model.width, model.height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="#f5f5f5"/>',
    ]
    if image_ref:
        parts.append(f"<!-- underlay: {image_ref} -->")
    for k, curve in enumerate(model.curves):
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in curve.pos)
        color = _COLORS[k % len(_COLORS)]
        parts.append(
            f'<polygon points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="0.6"/>')
        for x, y in curve.pos:
            parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="0.45" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg(model, path, image_ref: str | None = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(model_to_svg(model, image_ref))
