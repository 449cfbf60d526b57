"""Model adapters behind the wire protocol.

An adapter set exposes the same call surface as a client-side backend suite:
caption, detect, segment, generate, embed, health. The stub set is fully
deterministic and needs no checkpoints; the pretrained set lazily loads real
models and is only imported when selected.
"""

from __future__ import annotations

import numpy as np
from PIL import Image
from segsynth import RgbImage, voc_taxonomy
from segsynth.backends import MockBackendSuite, MockFixtures, RawDetection

from .config import ServerConfig

CAPABILITIES = ("caption", "detect", "segment", "generate", "embed")


class StubAdapters:
    """Deterministic checkpoint-free adapters for tests and dry runs.

    Delegates to the reference mock suite so stub responses match the
    protocol's golden fixtures byte for byte.
    """

    def __init__(self, config: ServerConfig):
        self._suite = MockBackendSuite(fixtures=MockFixtures(), taxonomy=voc_taxonomy())

    def caption(self, image):
        return self._suite.caption(image)

    def detect(self, image, class_names, threshold):
        return self._suite.detect(image, class_names, threshold)

    def segment(self, image, boxes):
        return self._suite.segment(image, boxes)

    def generate(self, control, prompt, seed, steps, guidance_scale,
                 width, height, negative_prompt=""):
        return self._suite.generate(
            control=control, prompt=prompt, seed=seed, steps=steps,
            guidance_scale=guidance_scale, width=width, height=height,
            negative_prompt=negative_prompt,
        )

    def embed(self, image, model_tag="default"):
        return self._suite.embed(image, model_tag)

    def health(self):
        return list(CAPABILITIES)


class PretrainedAdapters:
    """Real models loaded from the configured checkpoints.

    Each model loads lazily on first use and stays resident. Generation seeds
    are honored via a seeded torch generator; pixel-level determinism is not
    guaranteed on GPU.
    """

    def __init__(self, config: ServerConfig):
        self.config = config
        self._captioner = None
        self._detector = None
        self._segmenter = None
        self._generator = None
        self._embedder = None

    # -- lazy loaders -----------------------------------------------------
    def _load_captioner(self):
        if self._captioner is None:
            from transformers import pipeline

            self._captioner = pipeline(
                "image-to-text", model=self.config.caption_checkpoint,
                device=self.config.device,
            )
        return self._captioner

    def _load_detector(self):
        if self._detector is None:
            from transformers import pipeline

            self._detector = pipeline(
                "zero-shot-object-detection", model=self.config.detect_checkpoint,
                device=self.config.device,
            )
        return self._detector

    def _load_segmenter(self):
        if self._segmenter is None:
            from transformers import SamModel, SamProcessor

            model = SamModel.from_pretrained(self.config.segment_checkpoint)
            model.to(self.config.device)
            processor = SamProcessor.from_pretrained(self.config.segment_checkpoint)
            self._segmenter = (model, processor)
        return self._segmenter

    def _load_generator(self):
        if self._generator is None:
            import torch
            from diffusers import ControlNetModel, StableDiffusionControlNetPipeline

            controlnet = ControlNetModel.from_pretrained(self.config.generate_checkpoint)
            pipe = StableDiffusionControlNetPipeline.from_pretrained(
                self.config.generate_base_checkpoint, controlnet=controlnet,
                safety_checker=None,
            )
            pipe.to(self.config.device)
            self._generator = pipe
        return self._generator

    def _load_embedder(self):
        if self._embedder is None:
            from transformers import AutoImageProcessor, AutoModel

            model = AutoModel.from_pretrained(self.config.embed_checkpoint)
            model.to(self.config.device)
            processor = AutoImageProcessor.from_pretrained(self.config.embed_checkpoint)
            self._embedder = (model, processor)
        return self._embedder

    # -- capabilities -------------------------------------------------------
    def caption(self, image):
        outputs = self._load_captioner()(Image.fromarray(image.pixels))
        return outputs[0]["generated_text"].strip()

    def detect(self, image, class_names, threshold):
        outputs = self._load_detector()(
            Image.fromarray(image.pixels), candidate_labels=list(class_names), threshold=threshold
        )
        return [
            RawDetection(
                xyxy=(d["box"]["xmin"], d["box"]["ymin"], d["box"]["xmax"], d["box"]["ymax"]),
                label=d["label"],
                score=d["score"],
            )
            for d in outputs
        ]

    def segment(self, image, boxes):
        import torch

        model, processor = self._load_segmenter()
        inputs = processor(
            Image.fromarray(image.pixels), input_boxes=[[list(b) for b in boxes]], return_tensors="pt"
        ).to(self.config.device)
        with torch.no_grad():
            outputs = model(**inputs, multimask_output=False)
        masks = processor.image_processor.post_process_masks(
            outputs.pred_masks.cpu(),
            inputs["original_sizes"].cpu(),
            inputs["reshaped_input_sizes"].cpu(),
        )[0]
        return [np.asarray(m[0].numpy(), dtype=bool) for m in masks]

    def generate(self, control, prompt, seed, steps, guidance_scale,
                 width, height, negative_prompt=""):
        import torch

        pipe = self._load_generator()
        generator = torch.Generator(device=self.config.device).manual_seed(seed)
        result = pipe(
            prompt=prompt,
            negative_prompt=negative_prompt or None,
            image=Image.fromarray(control.pixels),
            num_inference_steps=steps,
            guidance_scale=guidance_scale,
            width=width,
            height=height,
            generator=generator,
        )
        return RgbImage(np.asarray(result.images[0].convert("RGB")))

    def embed(self, image, model_tag="default"):
        import torch

        model, processor = self._load_embedder()
        inputs = processor(Image.fromarray(image.pixels), return_tensors="pt").to(self.config.device)
        with torch.no_grad():
            outputs = model(**inputs)
        vector = outputs.last_hidden_state[0, 0].cpu().numpy().astype(np.float64)
        norm = np.linalg.norm(vector)
        return vector / norm if norm > 0 else vector

    def health(self):
        return list(CAPABILITIES)


def make_adapters(config: ServerConfig):
    if config.adapters == "stub":
        return StubAdapters(config)
    return PretrainedAdapters(config)
