import random
from pathlib import Path

import pytest

from sinogate.charset import ThresholdLevel, load_builtin

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def a1():
    return load_builtin(ThresholdLevel.A1)


@pytest.fixture(scope="session")
def a1plus():
    return load_builtin(ThresholdLevel.A1PLUS)


@pytest.fixture(scope="session")
def a2():
    return load_builtin(ThresholdLevel.A2)


@pytest.fixture(scope="session")
def table5_email():
    return (FIXTURES / "table5_email.txt").read_text("utf-8")


# Mixed-script alphabet for randomized metric tests: in-list Han, out-of-list
# Han, an Extension A char, an Extension B char (excluded by default ranges),
# Latin, pinyin with diacritics, digits, ASCII/CJK punctuation, fullwidth forms.
def mixed_script_string(rng: random.Random, a1_chars, max_len=60) -> str:
    pools = [
        list(a1_chars),
        list("愉嬉魅璨望希诉告祝"),
        ["㐀", "䶵"],
        ["\U00020000"],
        list("abcXYZ"),
        list("nǐhǎomā"),
        list("0123456789"),
        list(" ,.!?;:'\"()"),
        list("，。！？、：；"),
        list("ＡＢＣ１２３"),
    ]
    n = rng.randrange(max_len)
    return "".join(rng.choice(rng.choice(pools)) for _ in range(n))
