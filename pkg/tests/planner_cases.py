import random

from vkn.ldm import KnowledgeBase
from vkn.semantic import SemanticName
from vkn.vkmd import ModelDescription, ParamBinding


def random_kb(rng: random.Random, max_models=6, max_names=8):
    """A random KB of <= max_models single-output models over <= max_names names.

    Names are layered loosely so chains form often; the goal is never
    available, and most of the time is produced by some model.
    """
    n_names = rng.randint(3, max_names)
    names = [SemanticName(("N", f"n{i}")) for i in range(n_names)]
    kb = KnowledgeBase()
    models = {}
    n_models = rng.randint(1, max_models)
    for j in range(n_models):
        mid = f"m.{rng.choice('abcdef')}{j}"
        out_idx = rng.randint(1, n_names - 1)
        # mostly draw inputs from lower-numbered names, sometimes from anywhere (cycles)
        pool = names[:out_idx] if rng.random() < 0.8 else [n for k, n in enumerate(names) if k != out_idx]
        ins = rng.sample(pool, rng.randint(1, min(2, len(pool))))
        desc = ModelDescription(mid, tuple(ParamBinding(f"i{k}", n) for k, n in enumerate(ins)),
                                (ParamBinding("o", names[out_idx]),))
        kb.register_description(desc)
        models[mid] = (set(ins), {names[out_idx]})
    available = set(rng.sample(names[: max(1, n_names // 2)], rng.randint(1, max(1, n_names // 2))))
    outputs = [n for m in models.values() for n in m[1] if n not in available]
    if outputs and rng.random() < 0.9:
        goal = rng.choice(outputs)
    else:
        goal = rng.choice([n for n in names if n not in available])
    return kb, models, goal, available
