import io
from pathlib import Path

DATA = Path(__file__).parent / "data"

# The running ten-candidate example: query "aspergillus nidulans",
# gold 162425, nine lexically close negatives.
NIDULANS_GOLD = 162425
NIDULANS_CANDIDATES = {
    162425: "aspergillus nidulans aspergillus nidulellus emericella nidulans",
    41734: ("aspergillus latus aspergillus nidulans var latus "
            "aspergillus sp ajc 2016b emericella nidulans var lata"),
    1810908: ("aspergillus delacroixii aspergillus delacroxii "
              "aspergillus nidulans var echinulatus aspergillus spinulosporus "
              "emericella echinulata emericella nidulans var echinulata"),
    463277: "synechococcus nidulans",
    1898863: "mecopus nidulans",
    38812: "phyllotopsis nidulans",
    523898: "nassella nidulans",
    202207: "aphanothece nidulans",
    591996: "olgaea nidulans",
    245251: "oxalis nidulans",
}


def stream(text: str) -> io.StringIO:
    return io.StringIO(text)


def byte_stream(text: str) -> io.BytesIO:
    return io.BytesIO(text.encode("utf-8"))
