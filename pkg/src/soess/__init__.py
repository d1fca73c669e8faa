"""Essential-sentence toolkit for Stack Overflow answer threads.

Identifies candidate navigational-cue sentences with four techniques
(word patterns, lexrank, simple conditionals, context conditionals),
builds balanced rating studies over them, runs a quality-gated survey
service, and analyzes the collected ratings.
"""

__version__ = "0.1.0"
