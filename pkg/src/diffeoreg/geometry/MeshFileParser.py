"""Parser for line-oriented mesh files with NODES / TRIANGLES / BOUNDARY sections."""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path
from typing import IO, Any

import numpy as np
import pandas as pd
import pandera as pa

from diffeoreg.errors import DomainError
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.io.schemas.MeshSchema import BoundarySchema, NodesSchema, TrianglesSchema
from diffeoreg.io.schemas.SchemaValidation import validate_dataframe
from diffeoreg.io.sections import extract_sections, read_text, section_to_dataframe

logger = logging.getLogger(__name__)

SECTION_COLUMNS = {
    "NODES": ["id", "x", "y"],
    "TRIANGLES": ["id", "n1", "n2", "n3"],
    "BOUNDARY": ["node_id", "facet_id"],
}
SECTION_SCHEMAS = {
    "NODES": NodesSchema,
    "TRIANGLES": TrianglesSchema,
    "BOUNDARY": BoundarySchema,
}


class MeshFileParser:
    """
    Read a mesh file into a Triangulation.

    Node ids may be arbitrary non-negative integers; they are remapped to
    consecutive indices in file order. Triangles are reoriented when listed
    clockwise. The BOUNDARY section lists one `node_id facet_id` row per
    facet a node lies on.
    """

    def __init__(self, source: bytes | str | IO[Any] | Path) -> None:
        if isinstance(source, Path):
            self.origin = str(source)
            self.text = source.read_text(encoding="utf-8")
        else:
            self.origin = "<mesh>"
            self.text = read_text(source)

    def _section_frame(self, sections: dict[str, tuple[int, str]], header: str) -> pd.DataFrame:
        if header not in sections:
            if header == "BOUNDARY":
                logger.warning("%s has no BOUNDARY section; boundary flags left empty.", self.origin)
                return pd.DataFrame(columns=SECTION_COLUMNS[header])
            raise DomainError(f"{self.origin}: missing {header} section.")
        start_line, body = sections[header]
        try:
            df = section_to_dataframe(body, SECTION_COLUMNS[header])
            return validate_dataframe(
                df, SECTION_SCHEMAS[header], context=f"{self.origin}:{header}"
            )
        except (pa.errors.SchemaErrors, pa.errors.SchemaError, ValueError) as exc:
            raise DomainError(f"{self.origin}: invalid {header} section starting at line {start_line}: {exc}") from exc

    def parse(self) -> Triangulation:
        """Return the triangulation described by the file."""
        sections = extract_sections(self.text, tuple(SECTION_COLUMNS))
        nodes_df = self._section_frame(sections, "NODES")
        triangles_df = self._section_frame(sections, "TRIANGLES")
        boundary_df = self._section_frame(sections, "BOUNDARY")

        index_of = {int(node_id): i for i, node_id in enumerate(nodes_df["id"])}
        nodes = nodes_df.loc[:, ["x", "y"]].to_numpy(dtype=float)

        try:
            triangles = np.array(
                [[index_of[int(n)] for n in row] for row in triangles_df.loc[:, ["n1", "n2", "n3"]].to_numpy()],
                dtype=int,
            ).reshape(-1, 3)
        except KeyError as exc:
            raise DomainError(f"{self.origin}: triangle references unknown node {exc.args[0]}.") from exc

        corners = nodes[triangles]
        e1 = corners[:, 1] - corners[:, 0]
        e2 = corners[:, 2] - corners[:, 0]
        clockwise = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
        if clockwise.any():
            logger.info("%s: reorienting %d clockwise triangles.", self.origin, int(clockwise.sum()))
            triangles[clockwise] = triangles[clockwise][:, [0, 2, 1]]

        flags: dict[int, set[int]] = defaultdict(set)
        for node_id, facet_id in boundary_df.loc[:, ["node_id", "facet_id"]].to_numpy(dtype=int):
            if int(node_id) not in index_of:
                raise DomainError(f"{self.origin}: BOUNDARY references unknown node {node_id}.")
            flags[index_of[int(node_id)]].add(int(facet_id))

        tri = Triangulation(nodes, triangles, {k: frozenset(v) for k, v in flags.items()})
        domain = tri.to_domain()
        logger.debug(
            "%s: %d nodes, %d triangles, %d facets.", self.origin, len(nodes), len(triangles), len(domain.facets)
        )
        return Triangulation(tri.nodes, tri.triangles, tri.boundary_node_flags, domain)


def write_mesh_file(tri: Triangulation, path: Path) -> Path:
    """Write a triangulation in the NODES / TRIANGLES / BOUNDARY format."""
    lines = ["NODES"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(tri.nodes)]
    lines.append("TRIANGLES")
    lines += [f"{i} {a} {b} {c}" for i, (a, b, c) in enumerate(tri.triangles)]
    lines.append("BOUNDARY")
    for node in sorted(tri.boundary_node_flags):
        lines += [f"{node} {facet}" for facet in sorted(tri.boundary_node_flags[node])]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
