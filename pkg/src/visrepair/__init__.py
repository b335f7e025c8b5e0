"""Cross-modal repair of visual bugs in web UI projects.

The pipeline reads a GitHub-style issue (text plus screenshots), mines the
project's documentation, reconstructs reproduction code for the broken
screen, localizes the fault down to code regions, samples patch candidates,
then re-renders each candidate and lets a vision judge pick the one whose
screen actually matches the report.
"""

__version__ = "0.1.0"
