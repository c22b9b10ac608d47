"""Writes the golden prompt renderings.

Message text is copied from the published prompt templates; boards are
rendered here, independently of the Rust renderer. The order of example
boards and questions is the draw made with seed 7 (stream "prompt/target"
for generation, "translate/target" for translation), recorded below.
"""

import json
from pathlib import Path

HERE = Path(__file__).parent
FIX = HERE.parent

SYSTEM = ("You are a game-playing agent. Read the game instructions and examples carefully. "
          "Respond with a single question that can be answered with one word. "
          "Do not include any other explanation or prose.")
INSTRUCTIONS = ("You are playing the board game Battleship. There are three ships on the board: Red, Blue, and Purple. "
                "Ships are oriented either horizontally or vertically and can be 2, 3, or 4 tiles in length. "
                "The board is a 6x6 grid, with numbered rows 1, 2, 3, 4, 5, 6 and lettered columns A, B, C, D, E, F. "
                "Coordinates are specified as a row, column pair. For example, 2-C is the tile in row 2, column C.")
TASK = ("You will be given a partially-revealed game board. Your task is to ask a single question that will help you "
        "gain information about the position of the remaining hidden ships on the board. You can ask any question, "
        "but it must be answerable with a single word answer.")
TEXTUAL = "The board is represented as a textual description."
GRID = "The board is represented as a grid with the following symbols:\n\nH: Hidden\nW: Water\nR: Red ship\nB: Blue ship\nP: Purple ship"
EXAMPLES = "Here are some examples of questions from other agents about different boards."
TURN = "Now, it's your turn. Here is your board:"
TRANSLATE = "Your task is to translate each of the user's questions into a query program."

COLS = "ABCDEF"
NAMES = {"W": "water", "R": "red ship", "B": "blue ship", "P": "purple ship"}

SHOT_ORDER = [
    ("example", [
        "Do the red ship and the purple ship touch?",
        "At what location is the top left part of the red ship?",
        "How many tiles is the blue ship?",
        "Where is the bottom right of the purple ship?",
        "What is the orientation of the purple ship?",
        "Is the red ship horizontal?",
        "Is the blue ship vertical?",
        "What color is at 1C?",
        "Is 1A a purple tile?",
        "How long is the purple ship?",
    ]),
    ("board_c", [
        "How long are all the ships together?",
        "What color is 3F?",
        "How long is the red ship?",
        "Where is the bottom right of the blue ship?",
        "Is the red ship 2 tiles long?",
        "Where is the top left of the purple ship?",
        "Does the red ship touch both other ships?",
        "What color is 6B?",
        "Is 5E part of the blue ship?",
        "Is the blue ship three tiles long?",
    ]),
    ("board_d", [
        "Is the red ship horizontal?",
        "What is the orientation of the red ship?",
        "How many tiles is the blue ship?",
        "Is any part of the blue ship in row 1?",
        "What color is 2E?",
        "Where does the red ship start?",
        "Is any part of the red ship in column A?",
        "Is the blue ship vertical?",
        "Is 5B water?",
        "Where is the bottom right of the purple ship?",
    ]),
]

TRANSLATION_ORDER = [
    ("board_c", "Where is the top left of the purple ship?"),
    ("example", "Is the red ship horizontal?"),
    ("board_c", "Does the red ship touch both other ships?"),
    ("board_c", "Where is the bottom right of the blue ship?"),
    ("example", "At what location is the top left part of the red ship?"),
    ("board_d", "What color is 2E?"),
    ("board_c", "Is the blue ship three tiles long?"),
    (None, "How many tiles is the blue ship?"),
    ("board_c", "What color is 3F?"),
    ("board_c", "How long are all the ships together?"),
    ("board_d", "Is any part of the blue ship in row 1?"),
    ("board_d", "Where does the red ship start?"),
]
TARGET_QUESTION = "Are there more horizontal ships than vertical ships?"


def grid(rows):
    return "\n".join(["  " + " ".join(COLS)] + [f"{i + 1} " + " ".join(r) for i, r in enumerate(rows)])


def textual(rows):
    lines = [f"{i + 1}-{COLS[j]} is a {NAMES[c]} tile."
             for i, r in enumerate(rows) for j, c in enumerate(r) if c != "H"]
    return "\n".join(lines) if lines else "No tiles have been revealed."


def board(name):
    return json.loads((FIX / "boards" / f"{name}.json").read_text())["grid"]


def prepended(messages):
    return "".join(f"{role}: {text}\n\n" for role, text in messages) + "Assistant:"


def generation(mode, fmt):
    render = {"textual": textual, "grid": grid, "no_board": None}[fmt]
    msgs = [("System", SYSTEM), ("User", INSTRUCTIONS + "\n\n" + TASK)]
    if fmt == "textual":
        msgs.append(("User", TEXTUAL))
    elif fmt == "grid":
        msgs.append(("User", GRID))
    if mode == "few_shot":
        msgs.append(("User", EXAMPLES))
        for name, questions in SHOT_ORDER:
            if render:
                msgs.append(("User", render(board(name))))
            msgs.extend(("Assistant", q) for q in questions)
    if render:
        msgs.append(("User", TURN))
        msgs.append(("User", render(board("target"))))
    return prepended(msgs)


def translation():
    human = [json.loads(l) for l in (FIX / "human.jsonl").read_text().splitlines() if l.strip()]
    program = {}
    for row in human:
        program.setdefault(row["question"], row["program"])
    msgs = [("System", INSTRUCTIONS + "\n\n" + TRANSLATE)]
    for _, q in TRANSLATION_ORDER:
        msgs.append(("User", q))
        msgs.append(("Assistant", program[q]))
    msgs.append(("User", TARGET_QUESTION))
    return prepended(msgs)


if __name__ == "__main__":
    for mode in ("zero_shot", "few_shot"):
        for fmt in ("textual", "grid", "no_board"):
            (HERE / f"generation_{mode}_{fmt}.txt").write_text(generation(mode, fmt))
    (HERE / "translation.txt").write_text(translation())
