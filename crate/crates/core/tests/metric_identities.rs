use proptest::prelude::*;
use wmsn_stereo::metrics::{mse, psnr, ssim, MetricResult, SsimParams};
use wmsn_stereo::GrayImage;

fn arb_pair() -> impl Strategy<Value = (GrayImage, GrayImage)> {
    (8usize..24, 8usize..24).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(any::<u8>(), w * h),
            prop::collection::vec(any::<u8>(), w * h),
        )
            .prop_map(move |(a, b)| (GrayImage::new(w, h, a).unwrap(), GrayImage::new(w, h, b).unwrap()))
    })
}

proptest! {
    #[test]
    fn self_similarity((a, _) in arb_pair()) {
        prop_assert_eq!(ssim(&a, &a, &SsimParams::default()).unwrap(), MetricResult::Finite(1.0));
        prop_assert_eq!(psnr(&a, &a).unwrap(), MetricResult::Infinite);
    }

    #[test]
    fn symmetry((a, b) in arb_pair()) {
        let p = SsimParams::default();
        let ab = ssim(&a, &b, &p).unwrap().finite().unwrap();
        let ba = ssim(&b, &a, &p).unwrap().finite().unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn inverting_both_images_keeps_psnr((a, b) in arb_pair()) {
        let inv = |g: &GrayImage| {
            GrayImage::new(g.width(), g.height(), g.pixels().iter().map(|&v| 255 - v).collect()).unwrap()
        };
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&inv(&a), &inv(&b)).unwrap());
    }
}
