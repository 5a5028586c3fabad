"""Walk through URL parsing and the fixed 16-feature lexical vector.

Every model in this package consumes the same 16 numbers per URL, listed
in FEATURE_NAMES order. This script prints them for a handful of URLs so
you can see which lexical traits separate benign from malicious-looking
strings.
"""

from flipbench import FEATURE_NAMES, char_entropy, extract_features, parse_url

URLS = [
    "http://example.com/a?b=1",
    "https://login.bank-secure-verify.com/session/renew?id=77812&tok=ab3f",
    "https://1.2.3.4/download.exe",
    "example.com",  # scheme-less form is accepted and defaults to http
]

for url in URLS:
    parts = parse_url(url)
    print(f"\n{url}")
    print(f"  scheme={parts.scheme!r} hostname={parts.hostname!r} "
          f"path={parts.path!r} query={parts.query!r}")
    vec = extract_features(url)
    for name, value in zip(FEATURE_NAMES, vec):
        print(f"  {name:<20} {value:g}")

# Entropy is the only non-count feature worth a closer look: repeated
# characters carry no information, uniform strings carry the most.
print("\nentropy('aaaa')  =", char_entropy("aaaa"))
print("entropy('ab')    =", char_entropy("ab"))
print("entropy('abcd')  =", char_entropy("abcd"))
