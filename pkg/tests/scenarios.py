from vkn.comfort import area_items
from vkn.config import LinkSpec, NodeSpec, Scenario, SimConstants
from vkn.engine import COMFORT_MODEL_ID


def line_scenario(hops: int, constants: SimConstants | None = None, ego_bytecode=True,
                  server_bytecode=True, inputs=("LOW", "CLEAR", "FLUID"), latencies=None) -> Scenario:
    """V_ego -- r1 -- ... -- server_A, ``hops`` links long."""
    chain = ["V_ego"] + [f"r{i}" for i in range(1, hops)] + ["server_A"]
    nodes = [NodeSpec("V_ego", "z", bytecodes=(COMFORT_MODEL_ID,) if ego_bytecode else ())]
    nodes += [NodeSpec(n, "z") for n in chain[1:-1]]
    nodes.append(NodeSpec("server_A", "A", area_server=True,
                          bytecodes=(COMFORT_MODEL_ID,) if server_bytecode else ()))
    lat = latencies or [None] * hops
    links = tuple(LinkSpec(a, b, latency_ms=l) for a, b, l in zip(chain, chain[1:], lat))
    return Scenario(tuple(nodes), links, tuple(area_items("server_A", "A", *inputs)), "V_ego", ("A",),
                    COMFORT_MODEL_ID, "server_A", constants or SimConstants())
