"""Regenerate the checked-in replay fixture set used by the offline e2e tests.

Produces one synthetic assistant reply per item of the reduced plan in
tests/fixtures/plan_replay.json (1 model x 3 levels x 10 tasks x 2 conditions
x 1 run). Replies are deterministic functions of the request hash, mixing
in-list characters with a few deliberate out-of-list offenders so reports have
non-trivial ratios. Run from the repo root:

    python3 scripts/make_replay_fixtures.py
"""

import json
import random
from pathlib import Path

from sinogate import experiment, llm
from sinogate.charset import ThresholdLevel, load_builtin

ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = ROOT / "tests" / "fixtures" / "replay"
PLAN_PATH = ROOT / "tests" / "fixtures" / "plan_replay.json"

# Characters outside every builtin list, for A2-level offenders.
EXOTIC = "愉嬉魅璀璨龘饕餮"


def synth_reply(item: experiment.WorkItem, seed: int) -> str:
    rng = random.Random(seed)
    tlist = load_builtin(item.level)
    higher = load_builtin(ThresholdLevel.A2)
    offenders = [c for c in higher.characters if c not in tlist] or list(EXOTIC)
    offenders += [c for c in EXOTIC if c not in tlist]
    n_in = rng.randint(30, 60)
    # with_list runs lean cleaner than without_list ones
    n_out = rng.randint(0, 3) if item.condition == "with_list" else rng.randint(2, 8)
    chars = [rng.choice(tlist.characters) for _ in range(n_in)]
    for _ in range(n_out):
        chars.insert(rng.randrange(len(chars) + 1), rng.choice(offenders))
    body = "".join(chars)
    return (f"Hello! Let's practice {item.task} at the {item.level.value} level. "
            f"Here is a short text:\n\n{body}\n\nTake your time to read it.")


def main() -> None:
    plan = experiment.ExperimentPlan(models=("gpt-4o",), runs_per_cell=1)
    PLAN_PATH.write_text(json.dumps({
        "models": list(plan.models),
        "levels": [l.value for l in plan.levels],
        "tasks": list(plan.tasks),
        "runs_per_cell": plan.runs_per_cell,
        "temperature": plan.temperature,
    }, indent=2) + "\n", "utf-8")
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for old in FIXTURE_DIR.glob("*.json"):
        old.unlink()
    email = (ROOT / "tests" / "fixtures" / "table5_email.txt").read_text("utf-8")
    for item in experiment.expand(plan):
        request = experiment._make_request(item, plan)
        key = llm.request_hash(request)
        if item.level is ThresholdLevel.A1 and item.task == "RW2" \
                and item.condition == "with_list":
            content = email
        else:
            content = synth_reply(item, int(key[:12], 16))
        doc = {
            "request": llm.canonical_request(request),
            "response": {
                "content": content,
                "usage": {"input_tokens": 500 + len(request.turns[0].content) // 4,
                          "output_tokens": len(content) // 2},
                "truncated": False,
            },
        }
        (FIXTURE_DIR / f"{key}.json").write_text(
            json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            "utf-8")
    print(f"wrote {len(list(FIXTURE_DIR.glob('*.json')))} fixtures")


if __name__ == "__main__":
    main()
