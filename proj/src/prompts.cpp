#include "legival/prompts.hpp"

namespace legival::prompts {
namespace {

const std::string kMathPrompt = R"PROMPT(You are an expert on answering and explaining math questions. Read the question and formulate a response. Please reason step by step.
Formatting instructions:

1. When you have a final answer, you will wrap the final answer around a \boxed{} function so that it can be evaluated. If no such answer is found, you will receive no credit regardless of how much reasoning you did.

2. Your answer should exclusively use standard LaTeX math formatting (e.g., \frac{a}{b} for fractions, \sqrt{x} for square roots, \infty for infinity etc.). Do not use any math symbols or characters other than LaTeX formats -- they are ugly and indecipherable.

3. Do not include any decorators like dollar signs ($) in your final answer.

4. Do not surround the answer in a LaTeX code block. Return it as-is.

5. Do not include any units, suffixes, or variable definitions unless they are absolutely necessary.

6. Do not include any pre-phrasing like "the answer is..." or "x=...". Your goal is to create the easiest-to-parse string for a latex2sympy evaluator.

7. Your response MUST be ONLY the LaTeX-formatted final answer, with no additional text, explanations, or JSON structure.

Do not terminate until you have come up with a final answer.)PROMPT";

const std::string kGpqaPrompt = R"PROMPT(You are an expert on answering and explaining graduate-level scientific reasoning questions. To achieve success on this task, you will carefully consider the question and reason step by step.

You will choose a single option from a set of possible choices. Exactly one of the options is correct -- the rest are false. What is the single, most likely answer choice among the options?

When you are ready to respond, format your final answer as follows: "The correct answer is \boxed{X}", where X is whichever letter corresponds to your choice.
The response inside of \boxed{} MUST be ONLY the corresponding letter, with no additional text, explanations, or JSON structure. If you do not put your answer in \boxed{}, your answer will not be evaluated and you will gain no reward.

Do not terminate until you have come up with a final answer.)PROMPT";

const std::string kConnectionsPrompt = R"PROMPT(You are an assistant configured to solve the New York Times Connections Word game. Make four groups of four words that share something in common. Categories will always be more specific than `5-LETTER-WORDS`, `NAMES` or `VERBS.`

Example 1:
Words: ['DART', 'HEM', 'PLEAT', 'SEAM', 'CAN', 'CURE', 'DRY', 'FREEZE', 'BITE', 'EDGE', 'PUNCH', 'SPICE', 'CONDO', 'HAW', 'HERO', 'LOO']
Answer:
```{
    "Groupings": {
        "1": {
            "Category": "Things to sew",
            "Words": [
                "DART",
                "HEM",
                "PLEAT",
                "SEAM"
            ]
        },
        "2": {
            "Category": "Ways to preserve food",
            "Words": [
                "CAN",
                "CURE",
                "DRY",
                "FREEZE"
            ]
        },
        "3": {
            "Category": "Sharp quality",
            "Words": [
                "BITE",
                "EDGE",
                "PUNCH",
                "SPICE"
            ]
        },
        "4": {
            "Category": "Birds minus last letter",
            "Words": [
                "CONDO",
                "HAW",
                "HERO",
                "LOO"
            ]
        }
    }
}```

Example 2:
Words: ['COLLECTIVE', 'COMMON', 'JOINT', 'MUTUAL', 'CLEAR', 'DRAIN', 'EMPTY', 'FLUSH', 'CIGARETTE', 'PENCIL', 'TICKET', 'TOE', 'AMERICAN', 'FEVER', 'LUCID', 'PIPE']
Answer:
```{
    "Groupings": {
        "1": {
            "Category": "Shared",
            "Words": [
                "COLLECTIVE",
                "COMMON",
                "JOINT",
                "MUTUAL"
            ]
        },
        "2": {
            "Category": "Rid of contents",
            "Words": [
                "CLEAR",
                "DRAIN",
                "EMPTY",
                "FLUSH"
            ]
        },
        "3": {
            "Category": "Associated with 'stub'",
            "Words": [
                "CIGARETTE",
                "PENCIL",
                "TICKET",
                "TOE"
            ]
        },
        "4": {
            "Category": "__ Dream",
            "Words": [
                "AMERICAN",
                "FEVER",
                "LUCID",
                "PIPE"
            ]
        }
    }
}```

Categories share commonalities:
- There will never be a miscellaneous category
- No word will ever appear in two categories
- There will always be four words in a category
- As the category number increases, the connections between the words and their category becomes more obscure. The category 1 is the most easy and intuitive, category 4 is the hardest
- There may be a red herring category
- Category 4 often contains words with a common preposition or postposition, like the category 4 in the example

Please reason step by step. Please respond in a JSON format.)PROMPT";

const std::string kBoxedForce = "\n The answer is \\boxed";
const std::string kGroupingsForce = "\n My final groupings are:\n```{";

}  // namespace

const std::string& system_prompt(corpus::Dataset dataset) {
  switch (dataset) {
    case corpus::Dataset::math: return kMathPrompt;
    case corpus::Dataset::gpqa: return kGpqaPrompt;
    case corpus::Dataset::connections: return kConnectionsPrompt;
  }
  return kMathPrompt;
}

const std::string& forcing_string(corpus::Dataset dataset) {
  switch (dataset) {
    case corpus::Dataset::connections: return kGroupingsForce;
    default: return kBoxedForce;
  }
}

}  // namespace legival::prompts
