# Copyright 2026 The Attribench Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exception type raised by the native core."""


class AttribenchError(Exception):
    """A typed failure from the native core.

    Attributes:
      code: Stable error name such as "CONFIG_ERROR" or "CAPABILITY_MISSING".
      message: Human-readable description.
      row: 1-based input record for dataset loader errors, else None.
    """

    def __init__(self, code, message, row=None):
        super().__init__(code, message, row)
        self.code = code
        self.message = message
        self.row = row

    def __str__(self):
        return f"{self.code}: {self.message}"
