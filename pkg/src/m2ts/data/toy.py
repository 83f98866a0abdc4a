"""The bundled 32-pair mini-language corpus used for overfit and smoke runs."""
from __future__ import annotations

import json
from importlib import resources

from ..astgraph import parse_mini

PROGRAMS = [
    ("add_two", "func addTwo(a, b) { return a + b; }",
     "returns the sum of two numbers"),
    ("max_value", "func maxValue(a, b) { if (a > b) { return a; } else { return b; } }",
     "returns the larger of two values"),
    ("min_value", "func minValue(a, b) { if (a < b) { return a; } return b; }",
     "returns the smaller of two values"),
    ("abs_value", "func absValue(x) { if (x < 0) { return 0 - x; } return x; }",
     "computes the absolute value of x"),
    ("is_even", "func isEven(n) { return n % 2 == 0; }",
     "checks whether a number is even"),
    ("square", "func square(x) { return x * x; }",
     "returns the square of the input"),
    ("cube", "func cube(x) { return x * x * x; }",
     "returns the cube of the input"),
    ("sum_to", "func sumTo(n) { total = 0; i = 1; while (i <= n) { total = total + i; i = i + 1; } return total; }",
     "sums all integers from one to n"),
    ("factorial", "func factorial(n) { result = 1; while (n > 1) { result = result * n; n = n - 1; } return result; }",
     "computes the factorial of n iteratively"),
    ("power_of", "func powerOf(base, exp) { result = 1; while (exp > 0) { result = result * base; exp = exp - 1; } return result; }",
     "raises base to an integer power"),
    ("clamp", "func clampValue(x, low, high) { if (x < low) { return low; } if (x > high) { return high; } return x; }",
     "clamps a value into a closed range"),
    ("sign_of", "func signOf(x) { if (x > 0) { return 1; } if (x < 0) { return 0 - 1; } return 0; }",
     "returns the sign of a number"),
    ("print_value", "func printValue(value) { print(value); }",
     "prints the given value"),
    ("log_error", "func logError(code) { log(code, 2); return code; }",
     "logs an error code and returns it"),
    ("count_down", "func countDown(n) { while (n > 0) { print(n); n = n - 1; } }",
     "prints a countdown from n"),
    ("double_value", "func doubleValue(x) { return x * 2; }",
     "doubles the input value"),
    ("half_value", "func halfValue(x) { return x / 2; }",
     "halves the input value"),
    ("average", "func average(a, b) { return (a + b) / 2; }",
     "computes the average of two numbers"),
    ("is_positive", "func isPositive(x) { return x > 0; }",
     "checks whether a number is positive"),
    ("get_width", "func getSquareWidth(skin) { if (skin == 0) { return 0; } return width(skin); }",
     "returns the width of the square skin"),
    ("fib", "func fibonacci(n) { a = 0; b = 1; while (n > 0) { t = a + b; a = b; b = t; n = n - 1; } return a; }",
     "computes the nth fibonacci number"),
    ("gcd", "func greatestDivisor(a, b) { while (b != 0) { t = b; b = a % b; a = t; } return a; }",
     "finds the greatest common divisor"),
    ("is_zero", "func isZero(x) { return x == 0; }",
     "tests if the value is zero"),
    ("swap_print", "func swapPrint(a, b) { print(b); print(a); }",
     "prints two values in reverse order"),
    ("increment", "func increment(counter) { counter = counter + 1; return counter; }",
     "increments the counter by one"),
    ("decrement", "func decrement(counter) { counter = counter - 1; return counter; }",
     "decrements the counter by one"),
    ("reset", "func resetState(state) { state = 0; save(state); }",
     "resets the state and saves it"),
    ("area_rect", "func rectArea(width, height) { return width * height; }",
     "computes the area of a rectangle"),
    ("perimeter", "func rectPerimeter(width, height) { return 2 * (width + height); }",
     "computes the perimeter of a rectangle"),
    ("in_range", "func inRange(x, low, high) { return x >= low && x <= high; }",
     "checks if a value lies within bounds"),
    ("traverse_tree", "func traverse_tree(course) { queue = list(course); while (size(queue) > 0) { node = pop(queue); extend(queue, children(node)); } return 1; }",
     "load every descriptor in course"),
    ("send_message", "func sendMessage(channel, text) { if (open(channel)) { write(channel, text); return 1; } return 0; }",
     "sends a message if the channel is open"),
]


def toy_records():
    """Dataset records in the JSON-lines schema, ASTs parsed from the sources."""
    out = []
    for ident, code, summary in PROGRAMS:
        out.append({"id": ident, "code": code, "summary": summary, "ast": parse_mini(code).to_record()})
    return out


def write_toy_corpus(path):
    with open(path, "w", encoding="utf-8") as fh:
        for record in toy_records():
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def toy_corpus_path():
    return resources.files("m2ts.data").joinpath("toy_corpus.jsonl")
