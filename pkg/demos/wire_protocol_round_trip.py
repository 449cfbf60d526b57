"""Walkthrough: the HTTP wire protocol between pipeline and model backends.

Starts the mock inference server in-process, points the HTTP client at it,
and exercises all five capabilities. The same client speaks to the real
model-server sidecar unchanged; only the base URL differs.
"""

import numpy as np

from segsynth import RgbImage, voc_taxonomy
from segsynth.backends import (
    BackendConfig,
    HttpBackendSuite,
    MockBackendSuite,
    MockFixtures,
)
from segsynth.backends.wire import serve_mock


def checkerboard(h=32, w=32) -> RgbImage:
    pixels = np.zeros((h, w, 3), dtype=np.uint8)
    pixels[: h // 2, : w // 2] = voc_taxonomy().color_of(6)  # a "bus" region
    return RgbImage(pixels)


def main() -> None:
    suite = MockBackendSuite(fixtures=MockFixtures(), taxonomy=voc_taxonomy())
    server, base_url = serve_mock(suite)
    print(f"mock server at {base_url}")

    try:
        client = HttpBackendSuite(BackendConfig(base_url=base_url, max_in_flight=4))
        image = checkerboard()

        print("health:", client.health())
        print("caption:", repr(client.caption(image)))

        boxes = client.detect(image, ["bus"], 0.3)
        for box in boxes:
            print(f"detect: {box.label} score={box.score:.3f} xyxy={box.xyxy}")

        masks = client.segment(image, [b.xyxy for b in boxes])
        print(f"segment: {len(masks)} mask(s), foreground pixels = {int(masks[0].sum())}")

        generated = client.generate(
            control=image, prompt="a bus; bus", seed=42,
            steps=50, guidance_scale=7.5, width=32, height=32,
        )
        print(f"generate: {generated.width}x{generated.height} image")

        vector = client.embed(image)
        print(f"embed: dim={vector.shape[0]}, norm={np.linalg.norm(vector):.6f}")
    finally:
        server.shutdown()


if __name__ == "__main__":
    main()
