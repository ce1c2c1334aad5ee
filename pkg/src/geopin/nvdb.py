"""Client for the Norwegian road database (NVDB) traffic-sign layer.

Fetches sign positions inside a UTM33 bounding box and converts them to
ground-truth targets. Results are tagged ``source="nvdb"`` so the pipeline
never treats them as surveyed truth unless a session opts in.

Only the handful of response fields this module reads are required; anything
else the API returns is ignored. A missing required field raises SchemaDrift
rather than being papered over, because silently dropping objects would bias
an evaluation.
"""

from __future__ import annotations

import os
import re

import requests

from .errors import HttpError, SchemaDrift
from .geodesy import UtmCoord, utm33_to_wgs84
from .session import GroundTruthTarget

DEFAULT_NVDB_URL = "https://nvdbapiles-v3.atlas.vegvesen.no"
NVDB_URL_ENV = "GEOPIN_NVDB_URL"

# NVDB object-type id for traffic signs ("Skiltpunkt").
TRAFFIC_SIGN_TYPE_ID = 96

# EPSG:5973 = UTM zone 33N on EUREF89, the srid NVDB serves natively.
_NVDB_SRID = "5973"

_WKT_POINT = re.compile(
    r"^\s*POINT\s*(?:Z\s*)?\(\s*(-?[\d.eE+]+)\s+(-?[\d.eE+]+)(?:\s+-?[\d.eE+]+)?\s*\)\s*$",
    re.IGNORECASE,
)


def resolve_nvdb_url(base_url: str | None = None) -> str:
    """Explicit argument, then the environment, then the public endpoint."""
    return base_url or os.environ.get(NVDB_URL_ENV) or DEFAULT_NVDB_URL


def _parse_wkt_point(wkt: str, object_id: object) -> UtmCoord:
    m = _WKT_POINT.match(wkt)
    if m is None:
        raise SchemaDrift(f"object {object_id}: unparseable geometry wkt {wkt!r}")
    try:
        return UtmCoord(float(m.group(1)), float(m.group(2)))
    except ValueError as exc:
        raise SchemaDrift(f"object {object_id}: geometry out of range: {exc}") from exc


def _parse_object(obj: dict) -> GroundTruthTarget:
    if not isinstance(obj, dict) or "id" not in obj:
        raise SchemaDrift("response object lacks an 'id'")
    object_id = obj["id"]
    geom = obj.get("geometri")
    if not isinstance(geom, dict) or not isinstance(geom.get("wkt"), str):
        raise SchemaDrift(f"object {object_id}: missing 'geometri.wkt'")
    utm = _parse_wkt_point(geom["wkt"], object_id)
    return GroundTruthTarget(
        target_id=str(object_id),
        pos=utm33_to_wgs84(utm),
        kind="traffic_sign",
        source="nvdb",
    )


def nvdb_fetch_signs(
    bbox: tuple[float, float, float, float],
    base_url: str | None = None,
    http: requests.Session | None = None,
    page_size: int = 1000,
    timeout_s: float = 30.0,
) -> list[GroundTruthTarget]:
    """Fetch all traffic signs inside a UTM33 bbox (e_min, n_min, e_max, n_max).

    Follows the server's pagination cursor until a page comes back empty or
    the cursor stops advancing. Any non-200 response raises HttpError and no
    partial result is returned.
    """
    e_min, n_min, e_max, n_max = bbox
    if not (e_min < e_max and n_min < n_max):
        raise ValueError(f"degenerate bbox {bbox}")
    base = resolve_nvdb_url(base_url).rstrip("/")
    url = f"{base}/vegobjekter/{TRAFFIC_SIGN_TYPE_ID}"
    own_http = http is None
    http = http or requests.Session()
    params: dict[str, str] = {
        "kartutsnitt": f"{e_min},{n_min},{e_max},{n_max}",
        "srid": _NVDB_SRID,
        "inkluder": "geometri",
        "antall": str(page_size),
    }
    targets: list[GroundTruthTarget] = []
    cursor: str | None = None
    try:
        while True:
            if cursor is not None:
                params["start"] = cursor
            resp = http.get(url, params=params, timeout=timeout_s)
            if resp.status_code != 200:
                body = resp.text[:200]
                raise HttpError(f"GET {url} returned {resp.status_code}: {body}")
            try:
                doc = resp.json()
            except ValueError as exc:
                raise SchemaDrift(f"GET {url}: response is not JSON: {exc}") from exc
            objects = doc.get("objekter") if isinstance(doc, dict) else None
            if not isinstance(objects, list):
                raise SchemaDrift(f"GET {url}: response lacks an 'objekter' list")
            for obj in objects:
                targets.append(_parse_object(obj))
            meta = doc.get("metadata")
            next_cursor = None
            if isinstance(meta, dict) and isinstance(meta.get("neste"), dict):
                next_cursor = meta["neste"].get("start")
            if not objects or next_cursor is None or next_cursor == cursor:
                return targets
            cursor = str(next_cursor)
    finally:
        if own_http:
            http.close()
