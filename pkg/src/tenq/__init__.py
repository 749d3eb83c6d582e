"""10-Q itemization toolkit.

Turns SEC Form 10-Q filings (HTML or plain text) into per-item text
records: ingest -> normalize -> split into Parts -> identify Items ->
store. Filings the rule-based path cannot handle are routed through a
keyword-candidate generator and a binary title classifier.
"""

__version__ = "0.1.0"
