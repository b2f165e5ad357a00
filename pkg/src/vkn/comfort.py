"""Comfort-based rerouting: pick the area with the best comfort level."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .config import ItemSpec, LinkSpec, NodeSpec, Scenario, SimConstants
from .engine import COMFORT_MODEL_ID
from .semantic import ContentItem

UNAVAILABLE = "UNAVAILABLE"
# higher is better
COMFORT_RANK = {"GOOD": 3, "FAIR": 2, "POOR": 1, UNAVAILABLE: 0}


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class RouteDecision:
    area_comfort: dict[str, str]
    chosen: str
    no_comfort_data: bool = False

    def to_dict(self) -> dict:
        return {"area_comfort": dict(self.area_comfort), "chosen": self.chosen,
                "no_comfort_data": self.no_comfort_data}


def decide_route(samples: Mapping[str, ContentItem | str | None]) -> RouteDecision:
    """Choose the region with maximal comfort; ties go to the smallest region id.

    Values may be comfort samples, bare comfort symbols, or None for areas
    without data, which rank below POOR.
    """
    if not samples:
        raise EmptyInput("no regions to choose from")
    comfort = {}
    for region in sorted(samples):
        s = samples[region]
        value = s.value if isinstance(s, ContentItem) else s
        comfort[region] = value if value in COMFORT_RANK else UNAVAILABLE
    chosen = min(comfort, key=lambda r: (-COMFORT_RANK[comfort[r]], r))
    no_data = all(v == UNAVAILABLE for v in comfort.values())
    return RouteDecision(comfort, chosen, no_data)


AREA_INPUTS = {
    "A": ("MEDIUM", "CLEAR", "FLUID"),
    "B": ("LOW", "CLEAR", "FLUID"),
    "C": ("HIGH", "CLEAR", "FLUID"),
}


def area_items(server: str, region: str, c_tw: str, v: str, tr: str) -> list[ItemSpec]:
    return [
        ItemSpec(server, "Road.Traffic", tr, region),
        ItemSpec(server, "Road.Visibility", v, region),
        ItemSpec(server, "TwoWheelers.Concentration", c_tw, region),
    ]


def default_scenario(constants: SimConstants | None = None) -> Scenario:
    """V_ego reaches three area servers through one relay, two hops each.

    Inputs are placed so the comfort model yields A=FAIR, B=GOOD, C=POOR.
    The comfort bytecode sits on every area server and on V_ego.
    """
    nodes = [NodeSpec("V_ego", "ego_zone", bytecodes=(COMFORT_MODEL_ID,)),
             NodeSpec("relay", "ego_zone")]
    links = [LinkSpec("V_ego", "relay")]
    items = []
    for region, (c_tw, v, tr) in AREA_INPUTS.items():
        server = f"server_{region}"
        nodes.append(NodeSpec(server, region, area_server=True, bytecodes=(COMFORT_MODEL_ID,)))
        links.append(LinkSpec("relay", server))
        items += area_items(server, region, c_tw, v, tr)
    return Scenario(tuple(nodes), tuple(links), tuple(items), ego="V_ego",
                    queries=tuple(AREA_INPUTS), model_id=COMFORT_MODEL_ID,
                    bytecode_provider="server_A", constants=constants or SimConstants())
